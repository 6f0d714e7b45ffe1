#ifndef SFL_VERIFY_HPP
#define SFL_VERIFY_HPP

// Named invariant suites run by the `verify` command.

#include <string>
#include <vector>

#include "sfl/config.hpp"

namespace sfl {

enum class Suite { texp, gauge, birman_krein, krein_trace, paths, all };

/// ConfigError for an unknown name.
Suite parse_suite(const std::string& name);
std::string suite_name(Suite suite);

struct Check {
    std::string suite;
    std::string name;
    double residual = 0.0;
    double threshold = 0.0;
    bool passed = false;
    /// Set when the measured quantity is bounded below (e.g. a convergence ratio).
    std::string note;
};

std::vector<Check> run_suite(Suite suite, const ExperimentConfig& config);

}  // namespace sfl

#endif  // SFL_VERIFY_HPP
