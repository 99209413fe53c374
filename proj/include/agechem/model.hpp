#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace agechem {

struct Monod {
  double mu_max;
  double k_s;
};

struct Haldane {
  double mu_max;
  double k_p;
  double k_i;
};

// Specific growth rate mu(S). Parameters are checked on construction.
class GrowthKinetics {
 public:
  static GrowthKinetics monod(double mu_max, double k_s);
  static GrowthKinetics haldane(double mu_max, double k_p, double k_i);

  // mu(S); throws Domain for negative or non-finite S.
  double operator()(double s) const;
  // mu'(S) for S >= 0.
  double derivative(double s) const;

  const std::variant<Monod, Haldane>& parameters() const noexcept { return params_; }
  std::string name() const;

 private:
  explicit GrowthKinetics(std::variant<Monod, Haldane> p) : params_(p) {}
  std::variant<Monod, Haldane> params_;
};

double eval_growth(const GrowthKinetics& kinetics, double s);

struct GrowthConstants {
  double m_global;  // sup of mu over [0, inf)
  double m_box;     // max of mu over [0, S_in]
  double l_mu;      // max |mu'| over [0, S_in]
  double gamma;     // mu(S) <= gamma * S on [0, S_in]
};

GrowthConstants growth_constants(const GrowthKinetics& kinetics, double s_in);

enum class Extension { Zero, ConstantLast };

const char* to_string(Extension e) noexcept;

// Uniform-grid tabulation on [0, (n-1)*spacing] with linear interpolation
// between nodes and an extension rule past the last node.
class AgeProfile {
 public:
  AgeProfile() = default;
  AgeProfile(double spacing, std::vector<double> values, Extension extension);

  // One node with constant extension: the constant function.
  static AgeProfile constant(double value);

  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double extent() const noexcept;
  Extension extension() const noexcept { return extension_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double operator()(double a) const;

  // Max |node value|; the extension never exceeds it.
  double sup() const;
  // Exact integral of the interpolant over [0, a], extension included.
  double cumulative(double a) const;
  // Integral over [0, inf); +inf for a nonzero constant extension.
  double total_integral() const;
  // True when the profile describes a single constant value on [0, inf).
  std::optional<double> constant_value() const;

  friend bool operator==(const AgeProfile&, const AgeProfile&) = default;

 private:
  double spacing_ = 1.0;
  std::vector<double> values_;
  Extension extension_ = Extension::Zero;
  std::vector<double> node_cumulative_;
};

struct ChemostatModel {
  GrowthKinetics mu;
  AgeProfile beta;
  AgeProfile k;
  AgeProfile q;
  double s_in;
};

// exp(-(B(a2) - B(a1))) with B the exact cumulative mortality.
double survival(const ChemostatModel& model, double a1, double a2);

struct AssumptionCheck {
  std::string name;
  bool passed;
  std::string detail;
  std::optional<std::size_t> node;
};

struct ModelReport {
  std::vector<AssumptionCheck> checks;
  bool ok() const;
  std::string summary() const;
};

ModelReport validate_model(const ChemostatModel& model);

// Throws Config with the failing assumptions when the model is unusable.
void require_valid(const ChemostatModel& model);

}  // namespace agechem
