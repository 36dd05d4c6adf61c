#include "heavytails/families.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "heavytails/errors.hpp"
#include "heavytails/special.hpp"

namespace heavytails {

namespace sp = special;

namespace {

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw InvalidParameter(field, what);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Solve tail(z) = q for a standard normal, precise for arbitrarily small q.
double norm_inv_tail(double q) {
    if (q >= 1e-290) return -sp::norm_quantile(q);
    return sp::norm_inv_log_tail(std::log(q));
}

}  // namespace

// ---------------------------------------------------------------- Normal

Normal::Normal(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    require(std::isfinite(mu), "mu", "must be finite (got " + fmt(mu) + ")");
    require(sigma > 0 && std::isfinite(sigma), "sigma",
            "must be > 0 (got " + fmt(sigma) + ")");
}

double Normal::cdf(double x) const { return sp::norm_cdf((x - mu_) / sigma_); }
double Normal::tail(double x) const { return sp::norm_tail((x - mu_) / sigma_); }
double Normal::log_tail(double x) const { return sp::norm_log_tail((x - mu_) / sigma_); }
double Normal::pdf(double x) const { return sp::norm_pdf((x - mu_) / sigma_) / sigma_; }
double Normal::log_pdf(double x) const {
    return sp::norm_log_pdf((x - mu_) / sigma_) - std::log(sigma_);
}
double Normal::quantile(double p) const { return mu_ + sigma_ * sp::norm_quantile(p); }
double Normal::inv_tail(double q) const { return mu_ + sigma_ * norm_inv_tail(q); }
std::string Normal::name() const {
    return "normal(" + fmt(mu_) + "," + fmt(sigma_) + ")";
}

// ----------------------------------------------------------- Exponential

Exponential::Exponential(double rate) : rate_(rate) {
    require(rate > 0 && std::isfinite(rate), "rate",
            "must be > 0 (got " + fmt(rate) + ")");
}

double Exponential::cdf(double x) const { return x <= 0 ? 0.0 : -std::expm1(-rate_ * x); }
double Exponential::tail(double x) const { return x <= 0 ? 1.0 : std::exp(-rate_ * x); }
double Exponential::log_tail(double x) const { return x <= 0 ? 0.0 : -rate_ * x; }
double Exponential::pdf(double x) const {
    return x < 0 ? 0.0 : rate_ * std::exp(-rate_ * x);
}
double Exponential::log_pdf(double x) const {
    return x < 0 ? kNegInf : std::log(rate_) - rate_ * x;
}
double Exponential::quantile(double p) const { return -std::log1p(-p) / rate_; }
double Exponential::inv_tail(double q) const { return -std::log(q) / rate_; }
std::string Exponential::name() const { return "exponential(" + fmt(rate_) + ")"; }

// ---------------------------------------------------------------- Pareto

Pareto::Pareto(double shape, double scale) : shape_(shape), scale_(scale) {
    require(shape > 0 && std::isfinite(shape), "shape",
            "must be > 0 (got " + fmt(shape) + ")");
    require(scale > 0 && std::isfinite(scale), "scale",
            "must be > 0 (got " + fmt(scale) + ")");
}

double Pareto::cdf(double x) const {
    return x <= scale_ ? 0.0 : -std::expm1(shape_ * std::log(scale_ / x));
}
double Pareto::tail(double x) const {
    return x <= scale_ ? 1.0 : std::pow(scale_ / x, shape_);
}
double Pareto::log_tail(double x) const {
    return x <= scale_ ? 0.0 : shape_ * (std::log(scale_) - std::log(x));
}
double Pareto::pdf(double x) const {
    return x < scale_ ? 0.0 : shape_ / scale_ * std::pow(scale_ / x, shape_ + 1.0);
}
double Pareto::log_pdf(double x) const {
    if (x < scale_) return kNegInf;
    return std::log(shape_) - std::log(scale_) + (shape_ + 1.0) * (std::log(scale_) - std::log(x));
}
double Pareto::quantile(double p) const {
    return scale_ * std::exp(-std::log1p(-p) / shape_);
}
double Pareto::inv_tail(double q) const {
    return scale_ * std::pow(q, -1.0 / shape_);
}
std::optional<double> Pareto::mean() const {
    if (shape_ <= 1.0) return std::nullopt;
    return shape_ * scale_ / (shape_ - 1.0);
}
std::string Pareto::name() const {
    return "pareto(" + fmt(shape_) + "," + fmt(scale_) + ")";
}

// --------------------------------------------------------------- StudentT

StudentT::StudentT(double df) : df_(df) {
    require(df > 0 && std::isfinite(df), "df", "must be > 0 (got " + fmt(df) + ")");
    log_norm_ = std::lgamma(0.5 * (df_ + 1.0)) - std::lgamma(0.5 * df_) -
                0.5 * std::log(df_ * 3.14159265358979323846);
    // tail(x) ~ C x^-df with C = norm * df^{(df-1)/2}.
    log_coef_ = log_norm_ + 0.5 * (df_ - 1.0) * std::log(df_) - std::log(df_);
}

double StudentT::pdf(double x) const { return std::exp(log_pdf(x)); }
double StudentT::log_pdf(double x) const {
    return log_norm_ - 0.5 * (df_ + 1.0) * std::log1p(x * x / df_);
}

double StudentT::tail(double x) const {
    if (x == 0.0) return 0.5;
    double z = df_ / (df_ + x * x);
    double half_ibeta = 0.5 * sp::beta_inc_reg(0.5 * df_, 0.5, z);
    return x > 0 ? half_ibeta : 1.0 - half_ibeta;
}

double StudentT::cdf(double x) const { return tail(-x); }

double StudentT::log_tail(double x) const {
    if (x <= 0.0) {
        double t = tail(x);  // >= 1/2, no underflow
        return std::log(t);
    }
    double z = df_ / (df_ + x * x);
    double crossover = (0.5 * df_ + 1.0) / (0.5 * df_ + 2.5);
    if (z < 0.95 * crossover)
        return std::log(0.5) + sp::log_beta_inc_lower(0.5 * df_, 0.5, z);
    return std::log(tail(x));  // central region, tail is order 1/2
}

double StudentT::positive_inv_tail(double q) const {
    // Asymptotic initialization from tail(x) ~ C x^-df, then safeguarded
    // Newton on log_tail (deep tail) or tail (central region).
    double x;
    if (q < 0.25) {
        x = std::exp((log_coef_ - std::log(q)) / df_);
        double lq = std::log(q);
        for (int i = 0; i < 60; ++i) {
            double f = log_tail(x) - lq;
            double hazard = std::exp(log_pdf(x) - log_tail(x));
            double step = f / hazard;
            if (x + step <= 0) step = -0.5 * x;
            x += step;
            if (std::fabs(step) <= 1e-12 * (std::fabs(x) + 1e-300)) break;
        }
    } else {
        x = sp::norm_quantile(1.0 - q);
        if (x < 0) x = 0;
        for (int i = 0; i < 60; ++i) {
            double f = tail(x) - q;
            double step = f / pdf(x);
            if (x + step < 0) step = -0.5 * x;
            x += step;
            if (std::fabs(step) <= 1e-12 * (std::fabs(x) + 1.0)) break;
        }
    }
    return x;
}

double StudentT::quantile(double p) const {
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -positive_inv_tail(p);
    return positive_inv_tail(1.0 - p);
}

double StudentT::inv_tail(double q) const {
    if (q == 0.5) return 0.0;
    if (q < 0.5) return positive_inv_tail(q);
    return -positive_inv_tail(1.0 - q);
}

std::optional<double> StudentT::mean() const {
    if (df_ <= 1.0) return std::nullopt;
    return 0.0;
}
std::string StudentT::name() const { return "student_t(" + fmt(df_) + ")"; }

// -------------------------------------------------------------- LogNormal

LogNormal::LogNormal(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    require(std::isfinite(mu), "mu", "must be finite (got " + fmt(mu) + ")");
    require(sigma > 0 && std::isfinite(sigma), "sigma",
            "must be > 0 (got " + fmt(sigma) + ")");
}

double LogNormal::cdf(double x) const {
    return x <= 0 ? 0.0 : sp::norm_cdf((std::log(x) - mu_) / sigma_);
}
double LogNormal::tail(double x) const {
    return x <= 0 ? 1.0 : sp::norm_tail((std::log(x) - mu_) / sigma_);
}
double LogNormal::log_tail(double x) const {
    return x <= 0 ? 0.0 : sp::norm_log_tail((std::log(x) - mu_) / sigma_);
}
double LogNormal::pdf(double x) const { return x <= 0 ? 0.0 : std::exp(log_pdf(x)); }
double LogNormal::log_pdf(double x) const {
    if (x <= 0) return kNegInf;
    double z = (std::log(x) - mu_) / sigma_;
    return sp::norm_log_pdf(z) - std::log(sigma_) - std::log(x);
}
double LogNormal::quantile(double p) const {
    return std::exp(mu_ + sigma_ * sp::norm_quantile(p));
}
double LogNormal::inv_tail(double q) const {
    return std::exp(mu_ + sigma_ * norm_inv_tail(q));
}
std::optional<double> LogNormal::mean() const {
    return std::exp(mu_ + 0.5 * sigma_ * sigma_);
}
std::string LogNormal::name() const {
    return "lognormal(" + fmt(mu_) + "," + fmt(sigma_) + ")";
}

// -------------------------------------------------------- WeibullStretched

WeibullStretched::WeibullStretched(double shape, double scale)
    : shape_(shape), scale_(scale) {
    require(shape > 0 && std::isfinite(shape), "shape",
            "must be > 0 (got " + fmt(shape) + ")");
    require(scale > 0 && std::isfinite(scale), "scale",
            "must be > 0 (got " + fmt(scale) + ")");
}

double WeibullStretched::cdf(double x) const {
    return x <= 0 ? 0.0 : -std::expm1(-std::pow(x / scale_, shape_));
}
double WeibullStretched::tail(double x) const {
    return x <= 0 ? 1.0 : std::exp(-std::pow(x / scale_, shape_));
}
double WeibullStretched::log_tail(double x) const {
    return x <= 0 ? 0.0 : -std::pow(x / scale_, shape_);
}
double WeibullStretched::pdf(double x) const {
    return x <= 0 ? 0.0 : std::exp(log_pdf(x));
}
double WeibullStretched::log_pdf(double x) const {
    if (x <= 0) return kNegInf;
    double z = x / scale_;
    return std::log(shape_ / scale_) + (shape_ - 1.0) * std::log(z) - std::pow(z, shape_);
}
double WeibullStretched::quantile(double p) const {
    return scale_ * std::pow(-std::log1p(-p), 1.0 / shape_);
}
double WeibullStretched::inv_tail(double q) const {
    return scale_ * std::pow(-std::log(q), 1.0 / shape_);
}
std::optional<double> WeibullStretched::mean() const {
    return scale_ * std::tgamma(1.0 + 1.0 / shape_);
}
std::string WeibullStretched::name() const {
    return "weibull_stretched(" + fmt(shape_) + "," + fmt(scale_) + ")";
}

// --------------------------------------------------------------- Uniform

Uniform::Uniform(double a, double b) : a_(a), b_(b) {
    require(std::isfinite(a), "a", "must be finite (got " + fmt(a) + ")");
    require(std::isfinite(b) && b > a, "b",
            "must be finite and > a (got " + fmt(b) + ")");
}

double Uniform::cdf(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
}
double Uniform::log_tail(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return kNegInf;
    return std::log((b_ - x) / (b_ - a_));
}
double Uniform::pdf(double x) const {
    return (x < a_ || x > b_) ? 0.0 : 1.0 / (b_ - a_);
}
double Uniform::quantile(double p) const { return a_ + p * (b_ - a_); }
std::string Uniform::name() const {
    return "uniform(" + fmt(a_) + "," + fmt(b_) + ")";
}

// -------------------------------------------------------------- PointMass

PointMass::PointMass(double c) : c_(c) {
    require(std::isfinite(c), "c", "must be finite (got " + fmt(c) + ")");
}

double PointMass::cdf(double x) const { return x >= c_ ? 1.0 : 0.0; }
double PointMass::tail(double x) const { return x < c_ ? 1.0 : 0.0; }
double PointMass::quantile(double) const { return c_; }
double PointMass::sample(Rng&) const { return c_; }
std::optional<std::vector<Atom>> PointMass::atoms() const {
    return std::vector<Atom>{{c_, 1.0}};
}
std::string PointMass::name() const { return "point_mass(" + fmt(c_) + ")"; }

// --------------------------------------------------------------- Discrete

Discrete::Discrete(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), "atoms", "must be nonempty");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> merged;
    double total = 0.0;
    for (const Atom& a : atoms_) {
        require(std::isfinite(a.value), "atoms", "values must be finite");
        require(a.prob >= 0.0, "atoms", "probabilities must be nonnegative");
        if (!merged.empty() && merged.back().value == a.value)
            merged.back().prob += a.prob;
        else
            merged.push_back(a);
        total += a.prob;
    }
    require(std::fabs(total - 1.0) <= 1e-9, "atoms",
            "probabilities must sum to 1 (got " + fmt(total) + ")");
    atoms_ = std::move(merged);
    cum_.reserve(atoms_.size());
    double running = 0.0;
    for (const Atom& a : atoms_) {
        running += a.prob;
        cum_.push_back(running);
    }
    cum_.back() = 1.0;
}

double Discrete::cdf(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms_.size() && atoms_[i].value <= x; ++i)
        acc = cum_[i];
    return acc;
}

double Discrete::tail(double x) const {
    // Summed from the top so deep tails keep full relative precision.
    double acc = 0.0;
    for (std::size_t i = atoms_.size(); i-- > 0 && atoms_[i].value > x;)
        acc += atoms_[i].prob;
    return acc;
}

double Discrete::log_tail(double x) const {
    const double t = tail(x);
    return t > 0.0 ? std::log(t) : kNegInf;
}

double Discrete::quantile(double p) const {
    require(p >= 0.0 && p <= 1.0, "p", "must lie in [0, 1]");
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), p);
    const std::size_t i =
        it == cum_.end() ? atoms_.size() - 1
                         : static_cast<std::size_t>(it - cum_.begin());
    return atoms_[i].value;
}

double Discrete::sample(Rng& rng) const { return quantile(rng.uniform()); }

std::optional<double> Discrete::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m += a.value * a.prob;
    return m;
}

Support Discrete::support() const {
    return {atoms_.front().value, atoms_.back().value};
}

std::optional<std::vector<Atom>> Discrete::atoms() const { return atoms_; }

std::string Discrete::name() const {
    return "discrete(" + std::to_string(atoms_.size()) + " atoms)";
}

// -------------------------------------------------------------- Empirical

Empirical::Empirical(std::vector<double> values,
                     std::optional<TailExtrapolation> extrap)
    : sorted_(std::move(values)), extrap_(extrap) {
    require(!sorted_.empty(), "values", "must be nonempty");
    for (double v : sorted_)
        require(std::isfinite(v), "values", "must all be finite");
    if (extrap_)
        require(extrap_->alpha > 0 && std::isfinite(extrap_->alpha), "alpha",
                "must be > 0 (got " + fmt(extrap_->alpha) + ")");
    std::sort(sorted_.begin(), sorted_.end());
    if (extrap_)
        require(sorted_.back() > 0, "values",
                "tail extrapolation needs a positive sample maximum");
}

bool Empirical::tail_is_extrapolated(double x) const {
    return extrap_.has_value() && x > sorted_.back();
}

double Empirical::cdf(double x) const {
    if (tail_is_extrapolated(x)) return 1.0 - tail(x);
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / sorted_.size();
}

double Empirical::tail(double x) const {
    if (tail_is_extrapolated(x)) return std::exp(log_tail(x));
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(sorted_.end() - it) / sorted_.size();
}

double Empirical::log_tail(double x) const {
    if (tail_is_extrapolated(x)) {
        double n = static_cast<double>(sorted_.size());
        return -std::log(n) - extrap_->alpha * (std::log(x) - std::log(sorted_.back()));
    }
    double t = tail(x);
    return t > 0 ? std::log(t) : kNegInf;
}

double Empirical::quantile(double p) const {
    double n = static_cast<double>(sorted_.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(p * n)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0,
                                     static_cast<std::ptrdiff_t>(sorted_.size()) - 1);
    return sorted_[idx];
}

double Empirical::sample(Rng& rng) const {
    auto idx = static_cast<std::size_t>(rng.uniform() * sorted_.size());
    if (idx >= sorted_.size()) idx = sorted_.size() - 1;
    return sorted_[idx];
}

std::optional<double> Empirical::mean() const {
    double s = std::accumulate(sorted_.begin(), sorted_.end(), 0.0);
    return s / sorted_.size();
}

Support Empirical::support() const {
    return {sorted_.front(), extrap_ ? kInf : sorted_.back()};
}

std::optional<std::vector<Atom>> Empirical::atoms() const {
    std::vector<Atom> out;
    double w = 1.0 / sorted_.size();
    for (double v : sorted_) {
        if (!out.empty() && out.back().value == v)
            out.back().prob += w;
        else
            out.push_back({v, w});
    }
    return out;
}

std::string Empirical::name() const {
    std::string s = "empirical(n=" + std::to_string(sorted_.size()) + ")";
    if (extrap_) s += "+tail-extrapolation";
    return s;
}

// ------------------------------------------------------------ spec parsing

FamilySpec parse_family_spec(const std::string& text) {
    FamilySpec spec;
    std::size_t i = 0;
    while (i < text.size() &&
           (std::islower(static_cast<unsigned char>(text[i])) || text[i] == '_' ||
            (i > 0 && std::isdigit(static_cast<unsigned char>(text[i])))))
        ++i;
    if (i == 0) throw SpecParseError("expected family name", 0);
    spec.family = text.substr(0, i);
    if (i == text.size()) return spec;
    if (text[i] != ':')
        throw SpecParseError("expected ':' after family name", i);
    ++i;
    if (i == text.size()) throw SpecParseError("expected parameter after ':'", i);
    while (true) {
        std::size_t start = i;
        const char* first = text.data() + i;
        const char* last = text.data() + text.size();
        double value = 0;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr == first)
            throw SpecParseError("expected a real parameter", start);
        spec.params.push_back(value);
        i = ptr - text.data();
        if (i == text.size()) break;
        if (text[i] != ',')
            throw SpecParseError("expected ',' between parameters", i);
        ++i;
        if (i == text.size()) throw SpecParseError("trailing comma", i);
    }
    return spec;
}

DistPtr make_distribution(const FamilySpec& spec) {
    const auto& p = spec.params;
    auto arity = [&](std::initializer_list<std::size_t> allowed, const char* usage) {
        for (std::size_t a : allowed)
            if (p.size() == a) return;
        throw InvalidParameter(spec.family,
                               std::string("expected ") + usage + ", got " +
                                   std::to_string(p.size()) + " parameter(s)");
    };
    if (spec.family == "normal") {
        arity({0, 2}, "normal or normal:mu,sigma");
        return p.empty() ? std::make_shared<Normal>(0.0, 1.0)
                         : std::make_shared<Normal>(p[0], p[1]);
    }
    if (spec.family == "exponential") {
        arity({0, 1}, "exponential or exponential:rate");
        return std::make_shared<Exponential>(p.empty() ? 1.0 : p[0]);
    }
    if (spec.family == "pareto") {
        arity({1, 2}, "pareto:shape or pareto:shape,scale");
        return std::make_shared<Pareto>(p[0], p.size() == 2 ? p[1] : 1.0);
    }
    if (spec.family == "student_t") {
        arity({1}, "student_t:df");
        return std::make_shared<StudentT>(p[0]);
    }
    if (spec.family == "lognormal") {
        arity({0, 2}, "lognormal or lognormal:mu,sigma");
        return p.empty() ? std::make_shared<LogNormal>(0.0, 1.0)
                         : std::make_shared<LogNormal>(p[0], p[1]);
    }
    if (spec.family == "weibull_stretched") {
        arity({1, 2}, "weibull_stretched:shape or weibull_stretched:shape,scale");
        return std::make_shared<WeibullStretched>(p[0], p.size() == 2 ? p[1] : 1.0);
    }
    if (spec.family == "uniform") {
        arity({0, 2}, "uniform or uniform:a,b");
        return p.empty() ? std::make_shared<Uniform>(0.0, 1.0)
                         : std::make_shared<Uniform>(p[0], p[1]);
    }
    if (spec.family == "point_mass") {
        arity({1}, "point_mass:c");
        return std::make_shared<PointMass>(p[0]);
    }
    if (spec.family == "empirical")
        throw InvalidParameter("empirical",
                               "requires sample data; construct from samples or ingest a file");
    throw InvalidParameter(spec.family,
                           "unknown family (known: normal, exponential, pareto, student_t, "
                           "lognormal, weibull_stretched, uniform, point_mass, empirical)");
}

DistPtr make_distribution(const std::string& text) {
    return make_distribution(parse_family_spec(text));
}

}
