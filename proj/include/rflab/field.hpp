#pragma once

#include "rflab/analytic_flow.hpp"
#include "rflab/numeric.hpp"

#include <atomic>
#include <functional>
#include <string_view>

namespace rflab {

/// Discrete stand-in for the text prompt conditioning the velocity field.
enum class DomainTag { none = 0, a2b = 1, b2a = 2 };

inline constexpr std::size_t kDomainTagCount = 3;

std::string_view to_string(DomainTag tag);
DomainTag parse_domain_tag(std::string_view text);

/// v(z, t, tag). Implementations are deterministic for fixed inputs.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual LatentVector evaluate(const LatentVector& z, double t, DomainTag tag) const = 0;
  virtual std::size_t dimension() const = 0;
};

/// Theorem-1 optimal velocity for a Gaussian prior. Ignores the tag.
class GaussianField final : public VelocityField {
 public:
  explicit GaussianField(GaussianSpec spec) : spec_(std::move(spec)) {}
  LatentVector evaluate(const LatentVector& z, double t, DomainTag) const override {
    return expected_velocity(z, t, spec_);
  }
  std::size_t dimension() const override { return spec_.dimension(); }
  const GaussianSpec& spec() const { return spec_; }

 private:
  GaussianSpec spec_;
};

/// Exact posterior velocity for a mixture prior; t is clamped to 1 - 1e-9.
class MixtureField final : public VelocityField {
 public:
  explicit MixtureField(MixtureSpec spec) : spec_(std::move(spec)) {}
  LatentVector evaluate(const LatentVector& z, double t, DomainTag) const override;
  std::size_t dimension() const override { return spec_.dimension(); }

 private:
  MixtureSpec spec_;
};

/// Wraps an arbitrary callable; mostly for tests and toy fields.
class FunctionField final : public VelocityField {
 public:
  using Fn = std::function<LatentVector(const LatentVector&, double, DomainTag)>;
  FunctionField(std::size_t d, Fn fn) : d_(d), fn_(std::move(fn)) {}
  LatentVector evaluate(const LatentVector& z, double t, DomainTag tag) const override { return fn_(z, t, tag); }
  std::size_t dimension() const override { return d_; }

 private:
  std::size_t d_;
  Fn fn_;
};

class ZeroField final : public VelocityField {
 public:
  explicit ZeroField(std::size_t d) : d_(d) {}
  LatentVector evaluate(const LatentVector& z, double, DomainTag) const override {
    return LatentVector::Zero(z.size());
  }
  std::size_t dimension() const override { return d_; }

 private:
  std::size_t d_;
};

/// Forwards to another field and counts evaluations.
class CountingField final : public VelocityField {
 public:
  explicit CountingField(const VelocityField& inner) : inner_(inner) {}
  LatentVector evaluate(const LatentVector& z, double t, DomainTag tag) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.evaluate(z, t, tag);
  }
  std::size_t dimension() const override { return inner_.dimension(); }
  std::size_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const VelocityField& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace rflab
