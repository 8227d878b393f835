#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rararl/ensemble.hpp"

namespace rararl {

// One row per environment step. Optional fields stay empty in the CSV on
// steps where no update ran or the action was an exploration draw.
struct MetricsRow {
  long t = 0;
  long episode = 0;
  AgentRole role = AgentRole::Protagonist;
  double eps = 0.0;
  double reward_total = 0.0;
  double reward_progress_total = 0.0;
  double reward_progress_pure = 0.0;
  int catastrophes_this_episode = 0;
  bool has_loss_p = false;
  double loss_p = 0.0;
  bool has_loss_a = false;
  double loss_a = 0.0;
  bool has_variance = false;
  double variance_selected = 0.0;
};

class MetricsLog {
 public:
  static const char* header();

  void add(const MetricsRow& row) { rows_.push_back(row); }
  const std::vector<MetricsRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;

 private:
  std::vector<MetricsRow> rows_;
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace rararl
