#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sem/engine.hpp"

namespace sem {

FiringSchedule parse_schedule(std::istream& in, std::size_t n) {
  FiringSchedule out;
  out.female.resize(n);
  out.male.resize(n);
  std::vector<char> seen(2 * n, 0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head) || head[0] == '#') continue;
    auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::InvalidSchedule, "line " + std::to_string(line_no) + ": " + what);
    };
    if (head.size() < 2 || (head[0] != 'F' && head[0] != 'M')) fail("expected F<index> or M<index>, got '" + head + "'");
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(head.data() + 1, head.data() + head.size(), index);
    if (ec != std::errc{} || ptr != head.data() + head.size() || index == 0 || index > n) {
      fail("animal index in '" + head + "' must be between 1 and " + std::to_string(n));
    }
    const AnimalRef a{head[0] == 'F' ? Sex::Female : Sex::Male, index - 1};
    char& dup = seen[(a.sex == Sex::Female ? 0 : n) + a.index];
    if (dup) fail("animal " + head + " listed twice");
    dup = 1;
    auto& times = out.times(a);
    std::string token;
    while (fields >> token) {
      double t = 0.0;
      std::istringstream parse(token);
      if (!(parse >> t) || !parse.eof()) fail("'" + token + "' is not a number");
      if (!std::isfinite(t) || t <= 0.0 || (!times.empty() && t <= times.back())) {
        fail("times of " + head + " must be positive and strictly increasing");
      }
      times.push_back(t);
    }
  }
  return out;
}

FiringSchedule load_schedule(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidSchedule, "cannot open schedule file " + path);
  return parse_schedule(in, n);
}

void write_schedule(std::ostream& out, const FiringSchedule& schedule) {
  const auto saved = out.precision(17);
  for (Sex s : {Sex::Female, Sex::Male}) {
    for (std::size_t a = 0; a < schedule.n(); ++a) {
      out << (s == Sex::Female ? 'F' : 'M') << a + 1;
      for (double t : schedule.times({s, a})) out << ' ' << t;
      out << '\n';
    }
  }
  out.precision(saved);
}

}  // namespace sem
