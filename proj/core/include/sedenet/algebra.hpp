#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sedenet {

/// Multiplication table of a Cayley-Dickson algebra (reals, complexes,
/// quaternions, octonions, sedenions), stored sign/magnitude so that the
/// sign of a zero index is unambiguous.
///
/// Entry (r, c) states which weight component feeds output component r from
/// input component c, and with what sign:
///
///   y_r = sum_c  sign(r, c) * w_index(r, c) * x_c        for Y = W * X.
///
/// Equivalently, e_index(r,c) * e_c = sign(r,c) * e_r on the basis units.
class SignedIndexTable {
 public:
  /// Builds the table for the algebra of the given dimension via the
  /// Cayley-Dickson doubling (a,b)(c,d) = (ac - conj(d)b, da + b conj(c)).
  /// Accepts dim in {1, 2, 4, 8, 16}; throws std::invalid_argument otherwise.
  static SignedIndexTable cayley_dickson(int dim);

  /// The dimension-16 table hard-coded from its published transcription,
  /// used as the oracle the generated table must match entry-for-entry.
  static const SignedIndexTable& sedenion_reference();

  int dim() const noexcept { return dim_; }
  /// |T[r][c]|, in [0, dim).
  int index(int r, int c) const { return idx_[flat(r, c)]; }
  /// Sign of T[r][c], +1 or -1 (zero indices carry their own sign).
  int sign(int r, int c) const { return sgn_[flat(r, c)]; }
  /// sign(r,c) * index(r,c); note -0 collapses to 0 here.
  int signed_entry(int r, int c) const { return sign(r, c) * index(r, c); }

  /// Every absolute index appears exactly once per row and per column.
  bool latin_square() const;

  bool operator==(const SignedIndexTable& other) const;

  /// dim lines of dim space-separated signed integers.
  std::string to_text() const;

 private:
  SignedIndexTable(int dim) : dim_(dim), idx_(dim * dim, 0), sgn_(dim * dim, 1) {}
  int flat(int r, int c) const { return r * dim_ + c; }

  int dim_;
  std::vector<int8_t> idx_;
  std::vector<int8_t> sgn_;
};

/// A dim-component hypercomplex value; component 0 is the real part.
class HyperNumber {
 public:
  explicit HyperNumber(int dim);
  explicit HyperNumber(std::vector<double> components);

  /// s * e_k in the algebra of the given dimension.
  static HyperNumber unit(int dim, int k, double s = 1.0);

  int dim() const noexcept { return static_cast<int>(comp_.size()); }
  double operator[](int k) const { return comp_[k]; }
  double& operator[](int k) { return comp_[k]; }
  const std::vector<double>& components() const noexcept { return comp_; }

  bool is_zero() const;

 private:
  std::vector<double> comp_;
};

/// Y = W * X under the given table: y_r = sum_c sign(r,c) * w_index(r,c) * x_c.
/// Throws std::invalid_argument on dimension mismatch.
HyperNumber hyper_mul(const HyperNumber& w, const HyperNumber& x,
                      const SignedIndexTable& table);

/// Component 0 unchanged, components 1..dim-1 negated.
HyperNumber conjugate(HyperNumber a);

struct ZeroDivisorPair {
  HyperNumber u;
  HyperNumber v;
};

/// Brute-force search for u = e_i +/- e_j, v = e_k +/- e_l (1 <= i < j,
/// 1 <= k < l) with u * v exactly zero. Returns the first hit in scan order
/// (indices ascending, + before -); nullopt when the algebra has no such
/// pair (all dims below 16).
std::optional<ZeroDivisorPair> find_zero_divisor(const SignedIndexTable& table);

}  // namespace sedenet
