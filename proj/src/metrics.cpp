#include "rararl/metrics.hpp"

#include <charconv>
#include <sstream>

namespace rararl {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const char* MetricsLog::header() {
  return "t,episode,acting_role,eps,reward_total,reward_progress_total,"
         "reward_progress_pure,catastrophes_this_episode,loss_P,loss_A,"
         "mean_variance_selected_actions";
}

void MetricsLog::write_csv(std::ostream& os) const {
  os << header() << "\n";
  for (const MetricsRow& r : rows_) {
    os << r.t << ',' << r.episode << ','
       << (r.role == AgentRole::Protagonist ? 'P' : 'A') << ','
       << format_double(r.eps) << ','
       << format_double(r.reward_total) << ','
       << format_double(r.reward_progress_total) << ','
       << format_double(r.reward_progress_pure) << ','
       << r.catastrophes_this_episode << ',';
    if (r.has_loss_p) os << format_double(r.loss_p);
    os << ',';
    if (r.has_loss_a) os << format_double(r.loss_a);
    os << ',';
    if (r.has_variance) os << format_double(r.variance_selected);
    os << '\n';
  }
}

std::string MetricsLog::to_csv() const {
  std::ostringstream ss;
  write_csv(ss);
  return ss.str();
}

}  // namespace rararl
