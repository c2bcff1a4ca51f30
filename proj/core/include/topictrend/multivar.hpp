#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace topictrend::multivar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observations in rows, variables in columns.
struct Series {
  MatrixXd data;
  std::vector<std::string> names;

  int length() const { return static_cast<int>(data.rows()); }
  int dims() const { return static_cast<int>(data.cols()); }
};

Series make_series(MatrixXd data, std::vector<std::string> names = {});

struct EigenRow {
  double real = 0.0;
  double imag = 0.0;
  double modulus = 0.0;
};

struct VarModel {
  int p = 0;
  int k = 0;
  VectorXd intercept;
  std::vector<MatrixXd> coefs;  // A_1..A_p, each k x k
  MatrixXd coef_std_errors;     // k x (1 + k p), columns [const, A_1, ..., A_p]
  MatrixXd residuals;           // T_eff x k
  MatrixXd sigma_u;             // divisor T_eff - k p - 1
  MatrixXd sigma_mle;           // divisor T_eff
  MatrixXd regressors;          // T_eff x (1 + k p), rows [1, y_{t-1}', ..., y_{t-p}']
  MatrixXd xtx_inv;
  MatrixXd data;                // the input series, for bootstrapping
  std::vector<std::string> names;
  std::vector<EigenRow> eigenvalues;  // companion, sorted by modulus desc
  bool stable = false;
  double log_likelihood = 0.0;

  int effective_length() const { return static_cast<int>(residuals.rows()); }
  MatrixXd companion() const;
};

/// Per-equation least squares with a constant. Throws ValidationError when
/// T <= k p + 1 and NumericalError for a singular cross-product.
VarModel fit_var(const Series& series, int p);

/// Same on the observations from `first_row` onward as dependent values
/// (lags may reach before `first_row`). Used for common-sample lag choice.
VarModel fit_var_sample(const Series& series, int p, int first_row);

/// Moduli of the companion eigenvalues, sorted descending.
std::vector<EigenRow> companion_eigenvalues(const std::vector<MatrixXd>& coefs);

struct LagSelectionRow {
  int lag = 0;
  double log_likelihood = 0.0;
  std::optional<double> lr;
  std::optional<int> df;
  std::optional<double> p_value;
  double fpe = 0.0;
  double aic = 0.0;
  double hqic = 0.0;
  double sbic = 0.0;
};

struct LagSelection {
  std::vector<LagSelectionRow> rows;
  int effective_sample = 0;
  int lr_winner = 0;
  int fpe_winner = 0;
  int aic_winner = 0;
  int hqic_winner = 0;
  int sbic_winner = 0;
};

LagSelection select_lag(const Series& series, int max_lag, double lr_alpha = 0.05);

enum class DetSpec { None, Constant };

std::string to_string(DetSpec d);

struct JohansenRow {
  int rank = 0;
  int parameters = 0;
  double log_likelihood = 0.0;
  std::optional<double> eigenvalue;  // absent for rank 0
  std::optional<double> trace;       // absent for rank k
  std::optional<double> crit_5;
  std::optional<double> crit_1;
};

struct EngleGrangerResult {
  VectorXd first_stage;            // [const, slopes...]
  VectorXd first_stage_std_errors;
  double r2 = 0.0;
  int lag = 0;
  double statistic = 0.0;
  double crit_1 = 0.0;
  double crit_5 = 0.0;
  double crit_10 = 0.0;
};

enum class CointMethod { Johansen, EngleGranger };

struct CointegrationReport {
  CointMethod method = CointMethod::Johansen;
  DetSpec det = DetSpec::Constant;
  int lags = 0;
  int effective_sample = 0;
  std::vector<JohansenRow> johansen;
  /// Smallest rank whose trace statistic is below the 5% critical value.
  std::optional<int> selected_rank;
  std::optional<EngleGrangerResult> engle_granger;
  std::string critical_value_source;
};

/// 5% and 1% trace critical values for `k_minus_r` = k - r stochastic trends.
/// Constant: Osterwald-Lenum (1992) unrestricted-constant table.
/// None: MacKinnon, Haug and Michelis (1999) no-deterministic table.
std::optional<std::pair<double, double>> johansen_trace_critical(int k_minus_r, DetSpec det);

struct EgCritical {
  double one = 0.0;
  double five = 0.0;
  double ten = 0.0;
};

/// Residual-based Dickey-Fuller critical values for a cointegrating
/// regression with a constant and `num_variables` variables in total
/// (Davidson and MacKinnon 1993), 2..6 variables.
EgCritical engle_granger_critical(int num_variables);

/// `lags` is the VAR lag length in levels (Johansen) or the number of
/// augmentation lags of the residual DF test (Engle-Granger).
CointegrationReport cointegration(const Series& series, CointMethod method, int lags,
                                  DetSpec det = DetSpec::Constant);

struct VecmModel {
  int p = 0;  // lag length of the levels VAR
  int k = 0;
  int rank = 0;
  DetSpec det = DetSpec::Constant;
  MatrixXd alpha;               // k x r
  MatrixXd beta;                // k x r, top r x r block identity
  std::vector<MatrixXd> gamma;  // short-run, p - 1 matrices
  VectorXd intercept;           // zero when det == None
  MatrixXd residuals;
  MatrixXd sigma_u;
  std::vector<MatrixXd> level_coefs;  // levels VAR(p) representation
  std::vector<EigenRow> eigenvalues;  // companion of the levels VAR
  std::vector<double> johansen_eigenvalues;
  std::vector<std::string> names;
  double log_likelihood = 0.0;

  int unit_root_count(double tol = 1e-6) const;
};

VecmModel fit_vecm(const Series& series, int p, int rank, DetSpec det = DetSpec::Constant);

enum class GrangerMode { StrictTodaYamamoto, AllLags };

struct GrangerRow {
  std::string equation;  // effect
  std::string excluded;  // cause, or "ALL"
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

struct GrangerReport {
  int p = 0;
  int d_max = 0;
  GrangerMode mode = GrangerMode::AllLags;
  std::vector<GrangerRow> rows;
};

/// Wald tests in a levels VAR(p + d_max). AllLags restricts every lag of the
/// cause (df = p + d_max); StrictTodaYamamoto only the first p.
GrangerReport granger_wald(const Series& series, int p, int d_max, GrangerMode mode = GrangerMode::AllLags);

struct Bootstrap {
  int replications = 500;
  double level = 0.95;
  std::uint64_t seed = 1;
};

/// response[h](i, j): response of variable i at horizon h to a shock in j.
struct ImpulseResponse {
  std::vector<MatrixXd> response;
  std::optional<std::vector<MatrixXd>> lower;
  std::optional<std::vector<MatrixXd>> upper;
  bool orthogonalized = true;
  bool bands_refused = false;
  std::string note;
  std::vector<std::string> names;
};

/// MA coefficients Phi_0..Phi_horizon of a VAR with the given lag matrices.
std::vector<MatrixXd> ma_coefficients(const std::vector<MatrixXd>& coefs, int k, int horizon);

ImpulseResponse impulse_response(const VarModel& model, int horizon, bool orthogonalized = true,
                                 std::optional<Bootstrap> ci = std::nullopt);
/// Point paths only; a bootstrap request is refused and flagged.
ImpulseResponse impulse_response(const VecmModel& model, int horizon, bool orthogonalized = true,
                                 std::optional<Bootstrap> ci = std::nullopt);

/// share[s](i, j): share of the step-s forecast error variance of variable i
/// attributable to shock j. Step s >= 1 accumulates responses 0..s-1; step 0
/// repeats the impact decomposition.
struct Fevd {
  std::vector<MatrixXd> share;
  std::optional<std::vector<MatrixXd>> std_error;
  std::optional<std::vector<MatrixXd>> lower;
  std::optional<std::vector<MatrixXd>> upper;
  std::vector<std::string> names;
};

Fevd fevd(const VarModel& model, int horizon, std::optional<Bootstrap> ci = std::nullopt);

/// Recursive-design residual bootstrap replicate of `model` (same lag,
/// same initial values).
VarModel bootstrap_replicate(const VarModel& model, std::uint64_t seed);

struct NormalityRow {
  std::string equation;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double skewness_chi2 = 0.0;
  double kurtosis_chi2 = 0.0;
  double jb = 0.0;
  double skewness_p = 1.0;
  double kurtosis_p = 1.0;
  double jb_p = 1.0;
};

struct NormalityReport {
  std::vector<NormalityRow> equations;
  double joint_skewness_chi2 = 0.0;
  double joint_kurtosis_chi2 = 0.0;
  double joint_jb = 0.0;
  int joint_skewness_df = 0;
  int joint_kurtosis_df = 0;
  int joint_jb_df = 0;
  double joint_skewness_p = 1.0;
  double joint_kurtosis_p = 1.0;
  double joint_jb_p = 1.0;
};

/// Jarque-Bera family on residuals standardized with the Cholesky factor of
/// their covariance.
NormalityReport normality(const MatrixXd& residuals, const std::vector<std::string>& names = {});

struct LmRow {
  int lag = 0;
  double chi2 = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Lagrange-multiplier test for residual autocorrelation at lags 1..max_lag.
std::vector<LmRow> lm_autocorrelation(const VarModel& model, int max_lag = 2);

struct Diagnostics {
  std::vector<EigenRow> stability;
  bool stable = false;
  NormalityReport normality;
  std::vector<LmRow> lm;
};

Diagnostics diagnostics(const VarModel& model, int lm_max_lag = 2);
Diagnostics diagnostics(const VecmModel& model, const Series& series, int lm_max_lag = 2);

}  // namespace topictrend::multivar
