#ifndef FRACSHAPE_AUDIT_HPP
#define FRACSHAPE_AUDIT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fracshape/solvers.hpp"
#include "fracshape/stiffness.hpp"

namespace fracshape {

struct AuditCheck {
    std::string name;
    bool passed = true;
    double slack = 0.0;  // smallest margin observed; negative means violated
    int instances = 0;
    std::string detail;
};

struct AuditReport {
    std::vector<AuditCheck> checks;
    bool passed() const;
};

struct AuditCheckInfo {
    std::string name;
    std::string description;
};

std::vector<AuditCheckInfo> list_checks();

/// Runs the inequality suite on random masks of the operator's grid; each
/// seed drives `trials` instances per check.
AuditReport audit_operator(const StiffnessOperator& op, const std::vector<std::uint64_t>& seeds, int trials,
                           const SolverOptions& options = {});

}  // namespace fracshape

#endif
