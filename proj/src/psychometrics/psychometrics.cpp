#include "surveysim/psychometrics/psychometrics.hpp"

#include "surveysim/common/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace surveysim::psychometrics {

void ScaleDefinition::validate() const {
    if (item_codes.size() < 2) {
        throw ConfigurationError("scale '" + name + "' needs at least two items");
    }
    if (reverse_flags.size() != item_codes.size()) {
        throw ConfigurationError("scale '" + name + "' has " + std::to_string(reverse_flags.size()) +
                                 " reverse flags for " + std::to_string(item_codes.size()) + " items");
    }
    if (!(scale_min < scale_max)) {
        throw ConfigurationError("scale '" + name + "' has an empty range");
    }
}

double reverse_code(double raw, double scale_min, double scale_max) noexcept {
    return scale_min + scale_max - raw;
}

ScaleScores score_scales(const ResponseMatrix &responses, const std::vector<ScaleDefinition> &defs) {
    const auto n = static_cast<std::size_t>(responses.values.rows());
    if (responses.agent_ids.size() != n || responses.item_codes.size() != static_cast<std::size_t>(responses.values.cols())) {
        throw ValidationError("response matrix dimensions disagree with its labels");
    }
    ScaleScores out;
    out.agent_ids = responses.agent_ids;
    out.n = n;
    for (const auto &def : defs) {
        def.validate();
        std::vector<Eigen::Index> cols;
        for (const auto &code : def.item_codes) {
            const auto it = std::find(responses.item_codes.begin(), responses.item_codes.end(), code);
            if (it == responses.item_codes.end()) {
                throw IntegrityError("scale '" + def.name + "' item '" + code + "' is not in the response matrix");
            }
            cols.push_back(static_cast<Eigen::Index>(it - responses.item_codes.begin()));
        }
        auto &scores = out.scores[def.name];
        scores.assign(n, std::numeric_limits<double>::quiet_NaN());
        std::size_t deleted = 0;
        for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0;
            bool complete = true;
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const double raw = responses.values(static_cast<Eigen::Index>(r), cols[k]);
                if (std::isnan(raw)) {
                    complete = false;
                    continue;
                }
                if (raw < def.scale_min || raw > def.scale_max) {
                    throw ValidationError(fmt::format("agent '{}' item '{}' value {} outside [{}, {}]",
                                                      responses.agent_ids[r], def.item_codes[k], raw, def.scale_min,
                                                      def.scale_max));
                }
                sum += def.reverse_flags[k] ? reverse_code(raw, def.scale_min, def.scale_max) : raw;
            }
            if (complete) {
                scores[r] = sum / static_cast<double>(cols.size());
            } else {
                ++deleted;
            }
        }
        out.deleted[def.name] = deleted;
    }
    return out;
}

namespace {

double beta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    auto guard = [](double v) { return std::fabs(v) < tiny ? tiny : v; };
    double c = 1.0;
    double d = 1.0 / guard(1.0 - qab * x / qap);
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) {
            return h;
        }
    }
    return h;
}

} // namespace

double incomplete_beta(double x, double a, double b) {
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(x, a, b) / a;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return std::clamp(incomplete_beta(df / (df + t * t), df / 2.0, 0.5), 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
    const double tail = student_t_two_sided_p(t, df) / 2.0;
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double q, double df) {
    if (!(q > 0.0 && q < 1.0)) {
        throw std::invalid_argument("quantile level must lie in (0, 1)");
    }
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, df) > q) {
        lo *= 2.0;
    }
    while (student_t_cdf(hi, df) < q) {
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(lo)); ++i) {
        const double mid = (lo + hi) / 2.0;
        (student_t_cdf(mid, df) < q ? lo : hi) = mid;
    }
    return (lo + hi) / 2.0;
}

OlsFit ols(const Eigen::MatrixXd &x, const Eigen::VectorXd &y, const std::vector<std::string> &names) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (y.size() != n || static_cast<Eigen::Index>(names.size()) != p) {
        throw ValidationError("regression inputs have inconsistent dimensions");
    }
    if (n <= p + 1) {
        throw InsufficientDataError(fmt::format("regression with {} regressors needs more than {} rows, got {}", p,
                                                p + 1, n));
    }
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = x;

    // Grow the design one column at a time so a rank drop names the offending column.
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.leftCols(j + 2));
        qr.setThreshold(1e-10);
        if (qr.rank() < j + 2) {
            throw CollinearityError(names[static_cast<std::size_t>(j)]);
        }
    }

    OlsFit fit;
    fit.names = names;
    fit.n = static_cast<std::size_t>(n);
    fit.df = static_cast<std::size_t>(n - p - 1);
    fit.coef = design.colPivHouseholderQr().solve(y);
    fit.residuals = y - design * fit.coef;
    const double ss_res = fit.residuals.squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    if (ss_tot == 0.0) {
        throw ValidationError("regression outcome is constant");
    }
    fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    fit.sigma2 = ss_res / static_cast<double>(fit.df);
    const Eigen::MatrixXd xtx = design.transpose() * design;
    fit.covariance = fit.sigma2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    fit.se = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return fit;
}

namespace {

double sample_sd(const Eigen::VectorXd &v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

double t_stat(double b, double se) {
    if (se > 0.0) {
        return b / se;
    }
    return b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
}

struct Design {
    Eigen::MatrixXd columns; ///< seven centered terms in kTermNames order
    Eigen::VectorXd outcome;
};

Design build_design(const Eigen::VectorXd &knowledge, const Eigen::VectorXd &ftp, const Eigen::VectorXd &risk,
                    const Eigen::VectorXd &outcome) {
    const auto n = outcome.size();
    if (knowledge.size() != n || ftp.size() != n || risk.size() != n) {
        throw ValidationError("moderation model inputs have different lengths");
    }
    const Eigen::VectorXd k = knowledge.array() - knowledge.mean();
    const Eigen::VectorXd f = ftp.array() - ftp.mean();
    const Eigen::VectorXd r = risk.array() - risk.mean();
    Design d;
    d.outcome = outcome;
    d.columns.resize(n, 7);
    d.columns.col(0) = k;
    d.columns.col(1) = f;
    d.columns.col(2) = r;
    d.columns.col(3) = k.cwiseProduct(f);
    d.columns.col(4) = k.cwiseProduct(r);
    d.columns.col(5) = f.cwiseProduct(r);
    d.columns.col(6) = k.cwiseProduct(f).cwiseProduct(r);
    return d;
}

constexpr std::array<Eigen::Index, 3> kLevelWidth{3, 6, 7};

OlsFit fit_level(const Design &d, std::size_t level) {
    const auto width = kLevelWidth[level];
    return ols(d.columns.leftCols(width), d.outcome,
               std::vector<std::string>(kTermNames.begin(), kTermNames.begin() + width));
}

struct Complete {
    Eigen::VectorXd knowledge, ftp, risk, outcome;
    std::size_t deleted = 0;
};

Complete complete_cases(const ScaleScores &scores, const ModelVariables &vars) {
    auto column = [&](const std::string &name) -> const std::vector<double> & {
        const auto it = scores.scores.find(name);
        if (it == scores.scores.end()) {
            throw IntegrityError("scale '" + name + "' was not scored");
        }
        return it->second;
    };
    const auto &k = column(vars.knowledge);
    const auto &f = column(vars.ftp);
    const auto &r = column(vars.risk);
    const auto &y = column(vars.outcome);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isnan(k[i]) && !std::isnan(f[i]) && !std::isnan(r[i]) && !std::isnan(y[i])) {
            keep.push_back(i);
        }
    }
    Complete c;
    c.deleted = y.size() - keep.size();
    const auto m = static_cast<Eigen::Index>(keep.size());
    c.knowledge.resize(m);
    c.ftp.resize(m);
    c.risk.resize(m);
    c.outcome.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto src = keep[static_cast<std::size_t>(i)];
        c.knowledge[i] = k[src];
        c.ftp[i] = f[src];
        c.risk[i] = r[src];
        c.outcome[i] = y[src];
    }
    return c;
}

} // namespace

RegressionResult hierarchical_regression(const Eigen::VectorXd &knowledge, const Eigen::VectorXd &ftp,
                                         const Eigen::VectorXd &risk, const Eigen::VectorXd &outcome) {
    const auto d = build_design(knowledge, ftp, risk, outcome);
    RegressionResult result;
    result.n = static_cast<std::size_t>(outcome.size());
    if (result.n < 3) {
        throw InsufficientDataError("moderation model needs more observations");
    }
    const double sd_y = sample_sd(d.outcome);
    for (std::size_t level = 0; level < 3; ++level) {
        const auto fit = fit_level(d, level);
        auto &model = result.levels[level];
        model.level = static_cast<int>(level + 1);
        model.r_squared = fit.r_squared;
        model.df = fit.df;
        for (Eigen::Index j = 0; j < kLevelWidth[level]; ++j) {
            TermEstimate term;
            term.name = kTermNames[static_cast<std::size_t>(j)];
            term.level = j < 3 ? 1 : (j < 6 ? 2 : 3);
            term.b = fit.coef[j + 1];
            term.se = fit.se[j + 1];
            term.beta_std = term.b * sample_sd(d.columns.col(j)) / sd_y;
            term.t = t_stat(term.b, term.se);
            term.p = student_t_two_sided_p(term.t, static_cast<double>(fit.df));
            if (term.level == model.level) {
                result.terms.push_back(term);
            }
            model.terms.push_back(std::move(term));
        }
    }
    result.r_squared = result.levels[2].r_squared;
    return result;
}

RegressionResult hierarchical_regression(const ScaleScores &scores, const ModelVariables &vars) {
    const auto c = complete_cases(scores, vars);
    auto result = hierarchical_regression(c.knowledge, c.ftp, c.risk, c.outcome);
    result.deleted = c.deleted;
    return result;
}

SimpleSlopesResult simple_slopes(const Eigen::VectorXd &knowledge, const Eigen::VectorXd &ftp,
                                 const Eigen::VectorXd &risk, const Eigen::VectorXd &outcome, double band) {
    if (!(band > 0.0)) {
        throw ConfigurationError("simple-slopes band must be positive");
    }
    const auto d = build_design(knowledge, ftp, risk, outcome);
    const auto fit = fit_level(d, 2);
    const double sd_k = sample_sd(knowledge);
    const double sd_f = sample_sd(ftp);
    const double scale = sample_sd(risk) / sample_sd(outcome);

    SimpleSlopesResult result;
    result.band = band;
    result.n = fit.n;
    std::size_t cell = 0;
    for (const double fs : {1.0, -1.0}) {
        for (const double ks : {1.0, -1.0}) {
            const double k = ks * band * sd_k;
            const double f = fs * band * sd_f;
            // Coefficient indices (intercept = 0): Risk 3, K x R 5, F x R 6, K x F x R 7.
            Eigen::VectorXd g = Eigen::VectorXd::Zero(8);
            g[3] = 1.0;
            g[5] = k;
            g[6] = f;
            g[7] = k * f;
            auto &c = result.cells[cell++];
            c.ftp_level = fs > 0 ? "high" : "low";
            c.knowledge_level = ks > 0 ? "high" : "low";
            c.b = g.dot(fit.coef);
            c.se = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
            c.beta = c.b * scale;
            c.t = t_stat(c.b, c.se);
            c.p = student_t_two_sided_p(c.t, static_cast<double>(fit.df));
        }
    }
    return result;
}

SimpleSlopesResult simple_slopes(const ScaleScores &scores, const ModelVariables &vars, double band) {
    const auto c = complete_cases(scores, vars);
    return simple_slopes(c.knowledge, c.ftp, c.risk, c.outcome, band);
}

} // namespace surveysim::psychometrics
