#include "agechem/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "agechem/error.hpp"

namespace agechem {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be positive and finite, got " << v;
    fail(ErrorCode::Argument, os.str());
  }
}

double golden_section_max(auto&& fn, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = fn(c);
  double fd = fn(d);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + std::abs(hi)); ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = fn(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = fn(d);
    }
  }
  return std::max({fn(lo), fn(hi), fc, fd});
}

// Dense scan of [lo, hi] refined by golden section around the best sample.
double maximize(auto&& fn, double lo, double hi, int samples = 10000) {
  const double h = (hi - lo) / samples;
  int best = 0;
  double best_val = fn(lo);
  for (int i = 1; i <= samples; ++i) {
    const double v = fn(lo + i * h);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(best - 1, 0) * h;
  const double b = lo + std::min(best + 1, samples) * h;
  return std::max(best_val, golden_section_max(fn, a, b));
}

}  // namespace

GrowthKinetics GrowthKinetics::monod(double mu_max, double k_s) {
  require_positive(mu_max, "mu_max");
  require_positive(k_s, "K_S");
  return GrowthKinetics(Monod{mu_max, k_s});
}

GrowthKinetics GrowthKinetics::haldane(double mu_max, double k_p, double k_i) {
  require_positive(mu_max, "mu_max");
  require_positive(k_p, "K_P");
  require_positive(k_i, "K_I");
  return GrowthKinetics(Haldane{mu_max, k_p, k_i});
}

double GrowthKinetics::operator()(double s) const {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    std::ostringstream os;
    os << "growth rate evaluated at invalid substrate level " << s;
    fail(ErrorCode::Domain, os.str());
  }
  return std::visit(
      [s](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Monod>) {
          return p.mu_max * s / (p.k_s + s);
        } else {
          return p.mu_max * s / (p.k_p + s + s * s / p.k_i);
        }
      },
      params_);
}

double GrowthKinetics::derivative(double s) const {
  return std::visit(
      [s](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Monod>) {
          const double den = p.k_s + s;
          return p.mu_max * p.k_s / (den * den);
        } else {
          const double den = p.k_p + s + s * s / p.k_i;
          return p.mu_max * (p.k_p - s * s / p.k_i) / (den * den);
        }
      },
      params_);
}

std::string GrowthKinetics::name() const {
  return std::holds_alternative<Monod>(params_) ? "monod" : "haldane";
}

double eval_growth(const GrowthKinetics& kinetics, double s) { return kinetics(s); }

GrowthConstants growth_constants(const GrowthKinetics& kinetics, double s_in) {
  require_positive(s_in, "S_in");
  GrowthConstants c{};
  if (const auto* m = std::get_if<Monod>(&kinetics.parameters())) {
    c.m_global = m->mu_max;
    c.m_box = kinetics(s_in);
    c.l_mu = m->mu_max / m->k_s;
  } else {
    const auto& h = std::get<Haldane>(kinetics.parameters());
    const double s_star = std::sqrt(h.k_p * h.k_i);
    c.m_global = kinetics(s_star);
    c.m_box = kinetics(std::min(s_star, s_in));
    c.l_mu = maximize([&](double s) { return std::abs(kinetics.derivative(s)); }, 0.0, s_in);
  }
  c.gamma = c.l_mu;
  return c;
}

const char* to_string(Extension e) noexcept {
  return e == Extension::Zero ? "zero" : "constant";
}

AgeProfile::AgeProfile(double spacing, std::vector<double> values, Extension extension)
    : spacing_(spacing), values_(std::move(values)), extension_(extension) {
  require_positive(spacing_, "profile spacing");
  if (values_.empty()) fail(ErrorCode::Argument, "age profile needs at least one node");
  node_cumulative_.resize(values_.size());
  node_cumulative_[0] = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      std::ostringstream os;
      os << "age profile node " << i << " is not finite";
      fail(ErrorCode::Argument, os.str());
    }
    if (i > 0) {
      node_cumulative_[i] =
          node_cumulative_[i - 1] + 0.5 * spacing_ * (values_[i - 1] + values_[i]);
    }
  }
}

AgeProfile AgeProfile::constant(double value) {
  return AgeProfile(1.0, {value}, Extension::ConstantLast);
}

double AgeProfile::extent() const noexcept {
  return values_.empty() ? 0.0 : spacing_ * static_cast<double>(values_.size() - 1);
}

double AgeProfile::operator()(double a) const {
  if (values_.empty()) return 0.0;
  if (a <= 0.0) return values_.front();
  const double pos = a / spacing_;
  const auto last = values_.size() - 1;
  if (pos >= static_cast<double>(last)) {
    if (pos == static_cast<double>(last)) return values_.back();
    return extension_ == Extension::Zero ? 0.0 : values_.back();
  }
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * values_[i] + w * values_[i + 1];
}

double AgeProfile::sup() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double AgeProfile::cumulative(double a) const {
  if (values_.empty() || a <= 0.0) return 0.0;
  const double pos = a / spacing_;
  const auto last = values_.size() - 1;
  if (pos >= static_cast<double>(last)) {
    const double tail = extension_ == Extension::Zero ? 0.0 : values_.back() * (a - extent());
    return node_cumulative_.back() + tail;
  }
  const auto i = static_cast<std::size_t>(pos);
  const double da = a - static_cast<double>(i) * spacing_;
  const double va = (*this)(a);
  return node_cumulative_[i] + 0.5 * da * (values_[i] + va);
}

double AgeProfile::total_integral() const {
  if (values_.empty()) return 0.0;
  if (extension_ == Extension::ConstantLast && values_.back() != 0.0) {
    return values_.back() > 0.0 ? std::numeric_limits<double>::infinity()
                                : -std::numeric_limits<double>::infinity();
  }
  return node_cumulative_.back();
}

std::optional<double> AgeProfile::constant_value() const {
  if (values_.empty()) return std::nullopt;
  const double v = values_.front();
  if (!std::all_of(values_.begin(), values_.end(), [v](double x) { return x == v; })) {
    return std::nullopt;
  }
  if (extension_ == Extension::Zero && v != 0.0) return std::nullopt;
  return v;
}

double survival(const ChemostatModel& model, double a1, double a2) {
  if (!(a1 >= 0.0) || a1 > a2) {
    std::ostringstream os;
    os << "survival needs 0 <= a1 <= a2, got a1=" << a1 << " a2=" << a2;
    fail(ErrorCode::Argument, os.str());
  }
  return std::exp(-(model.beta.cumulative(a2) - model.beta.cumulative(a1)));
}

namespace {

void check_profile(ModelReport& report, const AgeProfile& p, const std::string& name) {
  AssumptionCheck nonneg{name + " nonnegative", true, "", std::nullopt};
  if (p.empty()) {
    nonneg.passed = false;
    nonneg.detail = "profile has no nodes";
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) {
      nonneg.passed = false;
      nonneg.node = i;
      std::ostringstream os;
      os << "node " << i << " has value " << p[i];
      nonneg.detail = os.str();
      break;
    }
  }
  report.checks.push_back(nonneg);

  AssumptionCheck bounded{name + " bounded", std::isfinite(p.sup()), "", std::nullopt};
  report.checks.push_back(bounded);
}

}  // namespace

bool ModelReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string ModelReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    if (c.passed) continue;
    os << "[fail] " << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << '\n';
  }
  return os.str();
}

ModelReport validate_model(const ChemostatModel& model) {
  ModelReport report;
  check_profile(report, model.beta, "beta");
  check_profile(report, model.k, "k");
  check_profile(report, model.q, "q");

  const double int_k = model.k.total_integral();
  const double int_q = model.q.total_integral();
  std::ostringstream dk, dq, ds;
  dk << "integral = " << int_k;
  dq << "integral = " << int_q;
  ds << "S_in = " << model.s_in;
  report.checks.push_back({"integral of k(a)da > 0", int_k > 0.0, dk.str(), std::nullopt});
  report.checks.push_back({"integral of q(a)da > 0", int_q > 0.0, dq.str(), std::nullopt});
  report.checks.push_back(
      {"S_in > 0", model.s_in > 0.0 && std::isfinite(model.s_in), ds.str(), std::nullopt});
  return report;
}

void require_valid(const ChemostatModel& model) {
  const auto report = validate_model(model);
  if (!report.ok()) fail(ErrorCode::Config, "model assumptions violated:\n" + report.summary());
}

}  // namespace agechem
