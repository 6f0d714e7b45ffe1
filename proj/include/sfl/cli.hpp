#ifndef SFL_CLI_HPP
#define SFL_CLI_HPP

// Command-line front end: ssf, smatrix and verify over an experiment config.

#include <iosfwd>
#include <string>
#include <vector>

#include "sfl/config.hpp"
#include "sfl/spectral_shift.hpp"
#include "sfl/verify.hpp"

namespace sfl {

/// Environment variable that replaces the configured output path.
inline constexpr const char* kOutputEnv = "SPECTRAL_FLOW_LAB_OUTPUT";

enum ExitCode : int { kExitClean = 0, kExitInvariant = 1, kExitDomain = 2, kExitConfig = 3 };

enum class RecordStatus { ok, flagged, resonance, band_edge };
std::string status_name(RecordStatus status);

struct LambdaRecord {
    double lambda = 0.0;
    double xi_ac = 0.0;
    double xi_ac_err = 0.0;
    Complex det;
    Eigen::Matrix2cd s = Eigen::Matrix2cd::Identity();
    /// Unwound eigenphases of S(lambda; H_r, H_start) at the end of the path.
    Eigen::Vector2d theta = Eigen::Vector2d::Zero();
    double unitarity_resid = 0.0;
    /// mu(theta_k) on the midpoint grid theta_k = 2 pi (k + 1/2) / theta_points.
    std::vector<int> mu;
    double mu_integral = 0.0;
    RecordStatus status = RecordStatus::ok;
    std::string message;
};

/// One record per band-grid point, in grid order whatever the thread count.
std::vector<LambdaRecord> sweep(const ExperimentConfig& config, bool with_mu, int threads);

std::string records_csv(const std::vector<LambdaRecord>& records);

nlohmann::json ssf_manifest(const ExperimentConfig& config, const std::vector<LambdaRecord>& records,
                            const std::vector<SingularStep>& steps, bool edge_warning);
nlohmann::json smatrix_manifest(const ExperimentConfig& config, const std::vector<LambdaRecord>& records);
nlohmann::json verify_manifest(const ExperimentConfig& config, Suite suite, const std::vector<Check>& checks);
std::string checks_csv(const std::vector<Check>& checks);

/// Exit code for a finished sweep: 2 on any domain error, 1 on any flagged record.
int sweep_exit_code(const std::vector<LambdaRecord>& records);

/// Full command line, including argv[0]. Diagnostics go to `err`; results go to
/// the resolved output path or to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sfl

#endif  // SFL_CLI_HPP
