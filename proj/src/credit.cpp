#include "rararl/credit.hpp"

#include <sstream>
#include <stdexcept>

#include "rararl/metrics.hpp"

namespace rararl {

ValueFn greedy_value_fn(const EnsembleQNetwork& net) {
  return [&net](const Observation& obs) {
    const QMatrix q = q_all_heads(net, obs);
    const std::vector<double> mean = mean_q(q);
    return mean[argmax_lowest(mean)];
  };
}

CreditTrace credit_decompose(std::span<const std::pair<Observation, AgentRole>> trajectory,
                             const ValueFn& value) {
  if (trajectory.size() < 2) {
    throw std::invalid_argument("credit_decompose: need at least two states");
  }
  CreditTrace out;
  out.steps.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    CreditStep st;
    st.index = static_cast<int>(i);
    st.role = trajectory[i].second;
    st.value = value(trajectory[i].first);
    st.signed_value = st.role == AgentRole::Protagonist ? st.value : -st.value;
    out.steps.push_back(st);
  }
  for (std::size_t i = 0; i + 1 < out.steps.size(); ++i) {
    const double td = out.steps[i + 1].signed_value - out.steps[i].signed_value;
    out.steps[i].has_td = true;
    out.steps[i].td = td;
    const double indicator = out.steps[i].role == AgentRole::Protagonist ? 1.0 : -1.0;
    out.td_protagonist += (1.0 + indicator) / 2.0 * td;
    out.td_adversary += (1.0 - indicator) / 2.0 * td;
  }
  out.delta_signed_value = out.steps.back().signed_value - out.steps.front().signed_value;
  return out;
}

std::string CreditTrace::to_csv() const {
  std::ostringstream os;
  os << "index,role,value,signed_value,td\n";
  for (const CreditStep& st : steps) {
    os << st.index << ',' << (st.role == AgentRole::Protagonist ? 'P' : 'A') << ','
       << format_double(st.value) << ',' << format_double(st.signed_value) << ',';
    if (st.has_td) os << format_double(st.td);
    os << '\n';
  }
  os << "totals,," << format_double(td_protagonist) << ',' << format_double(td_adversary)
     << ',' << format_double(delta_signed_value) << '\n';
  return os.str();
}

}  // namespace rararl
