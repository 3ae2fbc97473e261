#pragma once

#include <string>
#include <vector>

#include "table.hpp"

namespace kpzcli {

struct CheckRow {
  std::string suite, name;
  int n = 0;
  int points = 0;
  double max_err = 0;
  double threshold = 0;
  bool pass = false;
  std::string detail;
};

std::vector<CheckRow> suite_identities();
std::vector<CheckRow> suite_kernels_dual();
std::vector<CheckRow> suite_prelimit();
// Rescaled finite kernels against their limits at (x, y); pass needs a monotone
// decrease over Ms and the last error under the kernel's threshold.
std::vector<CheckRow> suite_convergence(const std::vector<double>& Ms = {50, 100, 200, 400}, double x = 0,
                                        double y = 0);

// One row per (kernel, M).
Table convergence_table(const std::vector<std::string>& kernels, const std::vector<double>& Ms, double x, double y);

Table check_table(const std::vector<CheckRow>& rows);
bool all_pass(const std::vector<CheckRow>& rows);

}  // namespace kpzcli
