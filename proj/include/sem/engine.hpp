#pragma once

// Simulation of the encounter-mating process: firing rounds, the two-stage
// encounter/mating mechanism, and the equivalent random-matching
// representation used as a second simulation path.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sem/core.hpp"
#include "sem/rng.hpp"

namespace sem {

enum class Sex { Female, Male };

struct AnimalRef {
  Sex sex = Sex::Female;
  std::size_t index = 0;

  bool operator==(const AnimalRef&) const = default;
};

/// Firing times per animal, indexed like the roster. Each sequence is
/// strictly increasing and positive; finite sequences simply end.
struct FiringSchedule {
  std::vector<std::vector<double>> female;
  std::vector<std::vector<double>> male;

  std::size_t n() const noexcept { return female.size(); }
  /// Throws InvalidSchedule on unequal sexes, non-positive, non-finite or
  /// non-increasing times.
  void validate() const;
  std::vector<double>& times(AnimalRef a) { return a.sex == Sex::Female ? female[a.index] : male[a.index]; }
  const std::vector<double>& times(AnimalRef a) const {
    return a.sex == Sex::Female ? female[a.index] : male[a.index];
  }
};

/// Text form: one line per animal, `F<i>` or `M<i>` (1-based) followed by
/// whitespace-separated times. Blank lines and lines starting with '#' are
/// ignored; animals without a line never fire.
FiringSchedule parse_schedule(std::istream& in, std::size_t n);
FiringSchedule load_schedule(const std::string& path, std::size_t n);
void write_schedule(std::ostream& out, const FiringSchedule& schedule);

struct FiringProcessSpec {
  enum class Kind { PoissonRates, BernoulliProbabilities, ExplicitSchedule };

  Kind kind = Kind::PoissonRates;
  std::optional<RateVector> rates;
  std::optional<FiringSchedule> schedule;

  static FiringProcessSpec poisson(RateVector rates);
  static FiringProcessSpec bernoulli(RateVector rates);
  static FiringProcessSpec explicit_schedule(FiringSchedule schedule);
};

/// Firing times up to `horizon` (inclusive). The times are those the
/// simulator would use under the same seed.
FiringSchedule sample_firing_schedule(const FiringProcessSpec& spec, const AnimalRoster& roster, double horizon,
                                      std::uint64_t seed);

struct Jump {
  double time = 0.0;
  PairList new_pairs;
  PairTypeMatrix q_after;
};

struct SimulationRecord {
  std::vector<Jump> jumps;
  double terminal_time = 0.0;
  PairList terminal_pairlist;
  PairTypeMatrix terminal_pattern;
  std::size_t rounds_elapsed = 0;
  /// Rounds of a continuous-time process at which several animals fired at
  /// the same floating-point time.
  std::size_t tie_anomalies = 0;
};

/// Order in which simultaneous firers choose partners. The terminal law does
/// not depend on it.
enum class FiringOrder { FemalesFirst, MalesFirst };

struct RunOptions {
  FiringOrder order = FiringOrder::FemalesFirst;
  /// Off: only the terminal fields are filled in.
  bool record_trajectory = true;
};

/// Unpaired animals of both sexes with O(1) membership tests and removal.
class SinglesPool {
 public:
  explicit SinglesPool(std::size_t n);

  std::size_t size() const noexcept { return females_.size(); }
  bool empty() const noexcept { return females_.empty(); }
  bool contains(AnimalRef a) const;
  const std::vector<std::size_t>& females() const noexcept { return females_; }
  const std::vector<std::size_t>& males() const noexcept { return males_; }
  /// Removes a permanently mated couple.
  void remove_pair(std::size_t female, std::size_t male);

 private:
  friend PairList encounter_round(SinglesPool&, const std::vector<AnimalRef>&, CounterRng&);
  std::vector<std::size_t>& list(Sex s) { return s == Sex::Female ? females_ : males_; }
  std::vector<std::size_t>& positions(Sex s) { return s == Sex::Female ? female_pos_ : male_pos_; }
  void move_to(Sex s, std::size_t animal, std::size_t slot);

  static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> females_, males_;
  std::vector<std::size_t> female_pos_, male_pos_;
};

/// Stage I of one round: firers, in the given order, each pick a uniformly
/// random partner of the opposite sex among singles not yet temporarily
/// paired this round; firers already picked are skipped. Reorders the pool's
/// internal lists but leaves its membership unchanged.
PairList encounter_round(SinglesPool& pool, const std::vector<AnimalRef>& firers, CounterRng& rng);

SimulationRecord run_sem(const PopulationCounts& pop, const AnimalRoster& roster, const PreferenceMatrix& p,
                         const FiringProcessSpec& spec, std::uint64_t seed, const RunOptions& options = {});

/// Each round matches all singles by a uniform random permutation, keeps
/// the couples containing a firer and applies the mating coin.
SimulationRecord run_sem_alternative(const PopulationCounts& pop, const AnimalRoster& roster,
                                     const PreferenceMatrix& p, const FiringProcessSpec& spec, std::uint64_t seed,
                                     const RunOptions& options = {});

}  // namespace sem
