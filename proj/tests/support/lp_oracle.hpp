#pragma once

#include <optional>
#include <vector>

namespace semrank::testing {

/// Dense two-phase simplex (Bland's rule) for  min c.x  s.t.  A x = b, x >= 0.
/// Slow but simple; used only to cross-check the transport solver.
/// Returns nullopt when infeasible.
std::optional<double> solve_standard_lp(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                                        const std::vector<double>& c);

/// Balanced transportation problem through solve_standard_lp.
std::optional<double> transport_lp(const std::vector<double>& supply, const std::vector<double>& demand,
                                   const std::vector<std::vector<double>>& cost);

}  // namespace semrank::testing
