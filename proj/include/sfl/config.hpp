#ifndef SFL_CONFIG_HPP
#define SFL_CONFIG_HPP

// Experiment configuration: one JSON document describing the operator path,
// the band grid and the numerical budgets.

#include <string>
#include <vector>

#include <json.hpp>

#include "sfl/scattering.hpp"

namespace sfl {

enum class OutputFormat { csv, json };

struct BandGrid {
    double min = -1.9;
    double max = 1.9;
    int points = 39;

    std::vector<double> values() const;
};

struct ExperimentConfig {
    /// Path vertices P_0, ..., P_n. P_0 defaults to the free operator.
    std::vector<LatticePotential> vertices;
    BandGrid band_grid;
    double edge_margin = kDefaultEdgeMargin;
    int r_nodes = 32;
    int texp_steps = 10000;
    int truncation_N = 2001;
    int theta_points = 256;
    double xi_tolerance = 1e-8;
    OutputFormat format = OutputFormat::csv;
    std::string output_path;
    /// Input document as read, for the manifest.
    nlohmann::json echo;

    OperatorPath path() const { return OperatorPath::through(vertices); }
};

/// Throws ConfigError on any malformed or out-of-range entry.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::string& file);

/// Site map with integer-string keys.
LatticePotential parse_potential(const nlohmann::json& object);
nlohmann::json potential_to_json(const LatticePotential& v);

}  // namespace sfl

#endif  // SFL_CONFIG_HPP
