#include "sem/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace sem {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kFiringStreams = 0x46495245;  // per-animal firing times
constexpr std::uint64_t kRoundStream = 0x524f554e;    // encounters and mating coins

std::uint64_t animal_id(AnimalRef a, std::size_t n) { return a.sex == Sex::Female ? a.index : n + a.index; }

std::size_t type_of(const AnimalRoster& roster, AnimalRef a) {
  return a.sex == Sex::Female ? roster.female_type(a.index) : roster.male_type(a.index);
}

// Successive firing times of one animal. Memoryless flavors draw gaps lazily
// from the animal's own counter-based stream, so the times do not depend on
// how far other animals have been advanced.
class FiringStream {
 public:
  FiringStream(const FiringProcessSpec& spec, const AnimalRoster& roster, AnimalRef a, std::uint64_t seed)
      : kind_(spec.kind), rng_(derive_seed(derive_seed(seed, kFiringStreams), animal_id(a, roster.n()))) {
    if (kind_ == FiringProcessSpec::Kind::ExplicitSchedule) {
      times_ = &spec.schedule->times(a);
    } else {
      const std::size_t type = type_of(roster, a);
      rate_ = a.sex == Sex::Female ? spec.rates->alpha(type) : spec.rates->beta(type);
    }
  }

  double next() {
    switch (kind_) {
      case FiringProcessSpec::Kind::PoissonRates:
        if (rate_ <= 0.0) return kNever;
        now_ += rng_.exponential(rate_);
        return now_;
      case FiringProcessSpec::Kind::BernoulliProbabilities:
        if (rate_ <= 0.0) return kNever;
        now_ += static_cast<double>(rng_.geometric(rate_));
        return now_;
      case FiringProcessSpec::Kind::ExplicitSchedule:
        return pos_ < times_->size() ? (*times_)[pos_++] : kNever;
    }
    return kNever;
  }

 private:
  FiringProcessSpec::Kind kind_;
  CounterRng rng_;
  double rate_ = 0.0;
  double now_ = 0.0;
  const std::vector<double>* times_ = nullptr;
  std::size_t pos_ = 0;
};

void check_spec(const FiringProcessSpec& spec, const AnimalRoster& roster) {
  if (spec.kind == FiringProcessSpec::Kind::ExplicitSchedule) {
    if (!spec.schedule) throw Error(ErrorCode::InvalidSchedule, "explicit process without a schedule");
    if (spec.schedule->n() != roster.n()) {
      throw Error(ErrorCode::InvalidSchedule, "schedule covers " + std::to_string(spec.schedule->n()) +
                                                  " couples but the roster has " + std::to_string(roster.n()));
    }
    return;
  }
  if (!spec.rates) throw Error(ErrorCode::InvalidRates, "firing process without rates");
  if (spec.rates->k() != roster.k()) throw Error(ErrorCode::WrongDimension, "rates and roster have different k");
  const Flavor want = spec.kind == FiringProcessSpec::Kind::PoissonRates ? Flavor::Poisson : Flavor::Bernoulli;
  if (spec.rates->flavor() != want) throw Error(ErrorCode::InvalidRates, "rate flavor does not match the process");
}

struct Pending {
  double time;
  int rank;
  std::size_t index;
  Sex sex;

  bool operator>(const Pending& o) const {
    if (time != o.time) return time > o.time;
    if (rank != o.rank) return rank > o.rank;
    return index > o.index;
  }
};

// Runs firing rounds until every animal is paired; `round` turns the
// round's firers into permanent pairs and removes them from the pool.
template <class Round>
SimulationRecord run_rounds(const PopulationCounts& pop, const AnimalRoster& roster, const PreferenceMatrix& p,
                            const FiringProcessSpec& spec, std::uint64_t seed, const RunOptions& options,
                            Round&& round) {
  pop.require_nonempty();
  if (roster.n() != static_cast<std::size_t>(pop.n()) || roster.k() != pop.k()) {
    throw Error(ErrorCode::InvalidArgument, "roster does not match the population");
  }
  if (p.k() != pop.k()) throw Error(ErrorCode::WrongDimension, "preferences and population have different k");
  check_spec(spec, roster);

  const std::size_t n = roster.n();
  const int female_rank = options.order == FiringOrder::FemalesFirst ? 0 : 1;
  std::vector<FiringStream> streams;
  streams.reserve(2 * n);
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
  for (Sex s : {Sex::Female, Sex::Male}) {
    for (std::size_t a = 0; a < n; ++a) {
      streams.emplace_back(spec, roster, AnimalRef{s, a}, seed);
      const double t = streams.back().next();
      if (t < kNever) queue.push({t, s == Sex::Female ? female_rank : 1 - female_rank, a, s});
    }
  }

  SinglesPool pool(n);
  CounterRng rng(derive_seed(seed, kRoundStream));
  SimulationRecord rec;
  rec.terminal_pattern = PairTypeMatrix(pop.k());
  std::vector<AnimalRef> firers;
  while (!pool.empty()) {
    firers.clear();
    double now = kNever;
    while (!queue.empty()) {
      const Pending top = queue.top();
      if (!pool.contains({top.sex, top.index})) {
        queue.pop();
        continue;
      }
      if (now < kNever && top.time != now) break;
      queue.pop();
      now = top.time;
      firers.push_back({top.sex, top.index});
      auto& stream = streams[animal_id({top.sex, top.index}, n)];
      if (const double t = stream.next(); t < kNever) queue.push({t, top.rank, top.index, top.sex});
    }
    if (firers.empty()) {
      throw Error(ErrorCode::HorizonExhausted, "firing times ran out with " + std::to_string(pool.size()) +
                                                   " couples still single");
    }
    ++rec.rounds_elapsed;
    if (spec.kind == FiringProcessSpec::Kind::PoissonRates && firers.size() > 1) ++rec.tie_anomalies;

    PairList formed = round(pool, firers, rng);
    if (formed.empty()) continue;
    for (const auto& [f, m] : formed.pairs) {
      rec.terminal_pattern.add(roster.female_type(f), roster.male_type(m), 1);
      rec.terminal_pairlist.pairs.emplace_back(f, m);
    }
    rec.terminal_time = now;
    if (options.record_trajectory) rec.jumps.push_back({now, std::move(formed), rec.terminal_pattern});
  }
  return rec;
}

}  // namespace

// ---- schedules ---------------------------------------------------------------

void FiringSchedule::validate() const {
  if (female.size() != male.size()) throw Error(ErrorCode::InvalidSchedule, "schedule needs as many males as females");
  for (Sex s : {Sex::Female, Sex::Male}) {
    const auto& side = s == Sex::Female ? female : male;
    for (std::size_t a = 0; a < side.size(); ++a) {
      double last = 0.0;
      for (double t : side[a]) {
        if (!std::isfinite(t) || t <= last) {
          throw Error(ErrorCode::InvalidSchedule, std::string(s == Sex::Female ? "F" : "M") + std::to_string(a + 1) +
                                                      ": times must be finite, positive and strictly increasing");
        }
        last = t;
      }
    }
  }
}

FiringProcessSpec FiringProcessSpec::poisson(RateVector rates) {
  if (rates.flavor() != Flavor::Poisson) throw Error(ErrorCode::InvalidRates, "expected Poisson rates");
  return {Kind::PoissonRates, std::move(rates), std::nullopt};
}

FiringProcessSpec FiringProcessSpec::bernoulli(RateVector rates) {
  if (rates.flavor() != Flavor::Bernoulli) throw Error(ErrorCode::InvalidRates, "expected Bernoulli probabilities");
  return {Kind::BernoulliProbabilities, std::move(rates), std::nullopt};
}

FiringProcessSpec FiringProcessSpec::explicit_schedule(FiringSchedule schedule) {
  schedule.validate();
  return {Kind::ExplicitSchedule, std::nullopt, std::move(schedule)};
}

FiringSchedule sample_firing_schedule(const FiringProcessSpec& spec, const AnimalRoster& roster, double horizon,
                                      std::uint64_t seed) {
  if (!std::isfinite(horizon) || horizon <= 0.0) throw Error(ErrorCode::InvalidHorizon, "horizon must be positive");
  if (spec.kind == FiringProcessSpec::Kind::BernoulliProbabilities && horizon != std::floor(horizon)) {
    throw Error(ErrorCode::InvalidHorizon, "Bernoulli horizon must be an integer");
  }
  check_spec(spec, roster);
  FiringSchedule out;
  out.female.resize(roster.n());
  out.male.resize(roster.n());
  for (Sex s : {Sex::Female, Sex::Male}) {
    for (std::size_t a = 0; a < roster.n(); ++a) {
      FiringStream stream(spec, roster, {s, a}, seed);
      auto& times = out.times({s, a});
      for (double t = stream.next(); t <= horizon; t = stream.next()) times.push_back(t);
    }
  }
  return out;
}

// ---- singles' pool -----------------------------------------------------------

SinglesPool::SinglesPool(std::size_t n) : females_(n), males_(n), female_pos_(n), male_pos_(n) {
  for (std::size_t a = 0; a < n; ++a) females_[a] = males_[a] = female_pos_[a] = male_pos_[a] = a;
}

bool SinglesPool::contains(AnimalRef a) const {
  const auto& pos = a.sex == Sex::Female ? female_pos_ : male_pos_;
  return a.index < pos.size() && pos[a.index] != kAbsent;
}

void SinglesPool::move_to(Sex s, std::size_t animal, std::size_t slot) {
  auto& l = list(s);
  auto& pos = positions(s);
  const std::size_t from = pos[animal];
  const std::size_t other = l[slot];
  std::swap(l[from], l[slot]);
  pos[other] = from;
  pos[animal] = slot;
}

void SinglesPool::remove_pair(std::size_t female, std::size_t male) {
  if (!contains({Sex::Female, female}) || !contains({Sex::Male, male})) {
    throw Error(ErrorCode::InvalidIndex, "animal is not single");
  }
  for (auto [s, a] : {std::pair{Sex::Female, female}, std::pair{Sex::Male, male}}) {
    move_to(s, a, list(s).size() - 1);
    list(s).pop_back();
    positions(s)[a] = kAbsent;
  }
}

PairList encounter_round(SinglesPool& pool, const std::vector<AnimalRef>& firers, CounterRng& rng) {
  // Animals already paired this round sit in the leading slots of each list.
  std::size_t used[2] = {0, 0};
  auto slot = [](Sex s) { return s == Sex::Female ? 0 : 1; };
  PairList out;
  for (const AnimalRef& a : firers) {
    if (!pool.contains(a)) throw Error(ErrorCode::InvalidIndex, "firer is not single");
    if (pool.positions(a.sex)[a.index] < used[slot(a.sex)]) continue;
    pool.move_to(a.sex, a.index, used[slot(a.sex)]++);
    const Sex other = a.sex == Sex::Female ? Sex::Male : Sex::Female;
    auto& candidates = pool.list(other);
    const std::size_t first = used[slot(other)];
    const std::size_t pick = first + rng.uniform_index(candidates.size() - first);
    const std::size_t partner = candidates[pick];
    pool.move_to(other, partner, used[slot(other)]++);
    if (a.sex == Sex::Female) {
      out.pairs.emplace_back(a.index, partner);
    } else {
      out.pairs.emplace_back(partner, a.index);
    }
  }
  return out;
}

// ---- simulation --------------------------------------------------------------

SimulationRecord run_sem(const PopulationCounts& pop, const AnimalRoster& roster, const PreferenceMatrix& p,
                         const FiringProcessSpec& spec, std::uint64_t seed, const RunOptions& options) {
  return run_rounds(pop, roster, p, spec, seed, options,
                    [&](SinglesPool& pool, const std::vector<AnimalRef>& firers, CounterRng& rng) {
                      PairList temporary = encounter_round(pool, firers, rng);
                      PairList formed;
                      for (const auto& [f, m] : temporary.pairs) {
                        if (rng.bernoulli(p(roster.female_type(f), roster.male_type(m)))) {
                          formed.pairs.emplace_back(f, m);
                          pool.remove_pair(f, m);
                        }
                      }
                      return formed;
                    });
}

SimulationRecord run_sem_alternative(const PopulationCounts& pop, const AnimalRoster& roster,
                                     const PreferenceMatrix& p, const FiringProcessSpec& spec, std::uint64_t seed,
                                     const RunOptions& options) {
  std::vector<char> fired_f(roster.n()), fired_m(roster.n());
  return run_rounds(pop, roster, p, spec, seed, options,
                    [&](SinglesPool& pool, const std::vector<AnimalRef>& firers, CounterRng& rng) {
                      for (const auto& a : firers) (a.sex == Sex::Female ? fired_f : fired_m)[a.index] = 1;
                      std::vector<std::size_t> females = pool.females();
                      std::vector<std::size_t> males = pool.males();
                      std::sort(females.begin(), females.end());
                      std::sort(males.begin(), males.end());
                      for (std::size_t i = males.size(); i > 1; --i) {
                        std::swap(males[i - 1], males[rng.uniform_index(i)]);
                      }
                      PairList formed;
                      for (std::size_t c = 0; c < females.size(); ++c) {
                        const std::size_t f = females[c];
                        const std::size_t m = males[c];
                        if (!fired_f[f] && !fired_m[m]) continue;
                        if (rng.bernoulli(p(roster.female_type(f), roster.male_type(m)))) {
                          formed.pairs.emplace_back(f, m);
                        }
                      }
                      for (const auto& [f, m] : formed.pairs) pool.remove_pair(f, m);
                      for (const auto& a : firers) (a.sex == Sex::Female ? fired_f : fired_m)[a.index] = 0;
                      return formed;
                    });
}

}  // namespace sem
