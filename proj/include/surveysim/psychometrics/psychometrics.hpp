#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace surveysim::psychometrics {

struct ScaleDefinition {
    std::string name;
    std::vector<std::string> item_codes;
    std::vector<bool> reverse_flags; ///< aligned with item_codes
    double scale_min = 1.0;
    double scale_max = 7.0;

    /// Throws ConfigurationError: fewer than two items, misaligned flags, empty range.
    void validate() const;
};

/// (scale_min + scale_max) - raw. Applying it twice returns raw.
double reverse_code(double raw, double scale_min, double scale_max) noexcept;

/// Agents x items; NaN marks an absent answer.
struct ResponseMatrix {
    std::vector<std::string> agent_ids;
    std::vector<std::string> item_codes;
    Eigen::MatrixXd values;
};

struct ScaleScores {
    std::vector<std::string> agent_ids;
    std::map<std::string, std::vector<double>> scores; ///< by scale; NaN = deleted listwise
    std::map<std::string, std::size_t> deleted;        ///< agents dropped per scale
    std::size_t n = 0;                                 ///< agent count
};

/// Mean of (possibly reversed) items per agent and scale. Throws ValidationError for a raw
/// value outside the scale range, IntegrityError for a scale item absent from the matrix.
ScaleScores score_scales(const ResponseMatrix &responses, const std::vector<ScaleDefinition> &defs);

/// Two-sided p for a t statistic: I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);
/// P(T <= t).
double student_t_cdf(double t, double df);
/// Inverse of student_t_cdf by bisection, q in (0, 1).
double student_t_quantile(double q, double df);
/// Regularized incomplete beta I_x(a, b) by continued fraction (modified Lentz).
double incomplete_beta(double x, double a, double b);

struct OlsFit {
    std::vector<std::string> names; ///< regressors, intercept excluded
    Eigen::VectorXd coef;           ///< intercept first
    Eigen::VectorXd se;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd residuals;
    double r_squared = 0.0;
    double sigma2 = 0.0;
    std::size_t n = 0;
    std::size_t df = 0; ///< n - regressors - 1
};

/// OLS with intercept. Throws CollinearityError naming the first column that is linearly
/// dependent on the intercept and earlier columns, InsufficientDataError when n <= p + 1.
OlsFit ols(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, const std::vector<std::string> &names);

struct TermEstimate {
    std::string name;
    int level = 1;
    double b = 0.0;
    double se = 0.0;
    double beta_std = 0.0;
    double t = 0.0;
    double p = 1.0;
};

struct LevelModel {
    int level = 1;
    std::vector<TermEstimate> terms; ///< every term of this model
    double r_squared = 0.0;
    std::size_t df = 0;
};

struct RegressionResult {
    /// Terms introduced at each level, estimated in that level's model.
    std::vector<TermEstimate> terms;
    std::array<LevelModel, 3> levels;
    double r_squared = 0.0; ///< Level-3 model
    std::size_t n = 0;
    std::size_t deleted = 0; ///< agents lacking one of the four scores
    std::string beta_convention = "staged: b*sd(x)/sd(y) from the model that introduces the term";
};

/// Scale names feeding the moderation model.
struct ModelVariables {
    std::string knowledge = "KFP";
    std::string ftp = "FTP";
    std::string risk = "FRT";
    std::string outcome = "RS";
};

inline const std::array<std::string, 7> kTermNames{"Knowledge",       "FTP",         "Risk",
                                                   "Knowledge x FTP", "Knowledge x Risk", "FTP x Risk",
                                                   "Knowledge x FTP x Risk"};

/// Three-level moderated regression on mean-centered predictors:
/// main effects, then pairwise products, then the triple product.
RegressionResult hierarchical_regression(const Eigen::VectorXd &knowledge, const Eigen::VectorXd &ftp,
                                         const Eigen::VectorXd &risk, const Eigen::VectorXd &outcome);
RegressionResult hierarchical_regression(const ScaleScores &scores, const ModelVariables &vars = {});

struct SlopeCell {
    std::string ftp_level; ///< "high" | "low"
    std::string knowledge_level;
    double b = 0.0;
    double beta = 0.0; ///< b * sd(risk) / sd(outcome)
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;
};

struct SimpleSlopesResult {
    std::array<SlopeCell, 4> cells; ///< (high, high), (high, low), (low, high), (low, low) as (FTP, knowledge)
    double band = 1.0;
    std::size_t n = 0;
};

/// Conditional slope of the outcome on risk at FTP and knowledge set to mean +/- band*SD,
/// from the Level-3 model, with standard errors from its coefficient covariance.
SimpleSlopesResult simple_slopes(const Eigen::VectorXd &knowledge, const Eigen::VectorXd &ftp,
                                 const Eigen::VectorXd &risk, const Eigen::VectorXd &outcome, double band = 1.0);
SimpleSlopesResult simple_slopes(const ScaleScores &scores, const ModelVariables &vars = {}, double band = 1.0);

} // namespace surveysim::psychometrics
