#include "sedenet/algebra.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sedenet {
namespace {

// e_i * e_j = sign * e_k on the basis of the dim-dimensional algebra.
// Doubling rule, with elements split as pairs over the half algebra:
//   (a,b)(c,d) = (ac - conj(d)b, da + b conj(c))
// Basis conjugation only flips the sign of nonzero indices, so the whole
// recursion stays in (sign, index) form.
std::pair<int, int> basis_product(int dim, int i, int j) {
  if (dim == 1) return {1, 0};
  const int n = dim / 2;
  const auto conj_sign = [](int k) { return k == 0 ? 1 : -1; };
  if (i < n && j < n) {  // (a,0)(c,0) = (ac, 0)
    return basis_product(n, i, j);
  }
  if (i < n) {  // (a,0)(0,d) = (0, da)
    auto [s, k] = basis_product(n, j - n, i);
    return {s, k + n};
  }
  if (j < n) {  // (0,b)(c,0) = (0, b conj(c))
    auto [s, k] = basis_product(n, i - n, j);
    return {s * conj_sign(j), k + n};
  }
  // (0,b)(0,d) = (-conj(d)b, 0)
  auto [s, k] = basis_product(n, j - n, i - n);
  return {-s * conj_sign(j - n), k};
}

// Dimension-16 signed index table, transcribed entry-for-entry from its
// published form. Zero indices are positive throughout.
constexpr int8_t kSedenionTable[16][16] = {
    {0, -1, -2, -3, -4, -5, -6, -7, -8, -9, -10, -11, -12, -13, -14, -15},
    {1, 0, -3, 2, -5, 4, 7, -6, -9, 8, 11, -10, 13, -12, -15, 14},
    {2, 3, 0, -1, -6, -7, 4, 5, -10, -11, 8, 9, 14, 15, -12, -13},
    {3, -2, 1, 0, -7, 6, -5, 4, -11, 10, -9, 8, 15, -14, 13, -12},
    {4, 5, 6, 7, 0, -1, -2, -3, -12, -13, -14, -15, 8, 9, 10, 11},
    {5, -4, 7, -6, 1, 0, 3, -2, -13, 12, -15, 14, -9, 8, -11, 10},
    {6, -7, -4, 5, 2, -3, 0, 1, -14, 15, 12, -13, -10, 11, 8, -9},
    {7, 6, -5, -4, 3, 2, -1, 0, -15, -14, 13, 12, -11, -10, 9, 8},
    {8, 9, 10, 11, 12, 13, 14, 15, 0, -1, -2, -3, -4, -5, -6, -7},
    {9, -8, 11, -10, 13, -12, -15, 14, 1, 0, 3, -2, 5, -4, -7, 6},
    {10, -11, -8, 9, 14, 15, -12, -13, 2, -3, 0, 1, 6, 7, -4, -5},
    {11, 10, -9, -8, 15, -14, 13, -12, 3, 2, -1, 0, 7, -6, 5, -4},
    {12, -13, -14, -15, -8, 9, 10, 11, 4, -5, -6, -7, 0, 1, 2, 3},
    {13, 12, -15, 14, -9, -8, -11, 10, 5, 4, -7, 6, -1, 0, -3, 2},
    {14, 15, 12, -13, -10, 11, -8, -9, 6, 7, 4, -5, -2, 3, 0, -1},
    {15, -14, 13, 12, -11, -10, 9, -8, 7, -6, 5, 4, -3, -2, 1, 0},
};

}  // namespace

SignedIndexTable SignedIndexTable::cayley_dickson(int dim) {
  if (dim < 1 || dim > 16 || (dim & (dim - 1)) != 0) {
    throw std::invalid_argument("table dimension must be one of 1, 2, 4, 8, 16");
  }
  SignedIndexTable t(dim);
  for (int c = 0; c < dim; ++c) {
    for (int m = 0; m < dim; ++m) {
      auto [s, r] = basis_product(dim, m, c);
      t.idx_[t.flat(r, c)] = static_cast<int8_t>(m);
      t.sgn_[t.flat(r, c)] = static_cast<int8_t>(s);
    }
  }
  return t;
}

const SignedIndexTable& SignedIndexTable::sedenion_reference() {
  static const SignedIndexTable table = [] {
    SignedIndexTable t(16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const int v = kSedenionTable[r][c];
        t.idx_[t.flat(r, c)] = static_cast<int8_t>(v < 0 ? -v : v);
        t.sgn_[t.flat(r, c)] = static_cast<int8_t>(v < 0 ? -1 : 1);
      }
    }
    return t;
  }();
  return table;
}

bool SignedIndexTable::latin_square() const {
  std::vector<int> row_seen(dim_), col_seen(dim_);
  for (int r = 0; r < dim_; ++r) {
    std::fill(row_seen.begin(), row_seen.end(), 0);
    for (int c = 0; c < dim_; ++c) ++row_seen[index(r, c)];
    for (int m = 0; m < dim_; ++m)
      if (row_seen[m] != 1) return false;
  }
  for (int c = 0; c < dim_; ++c) {
    std::fill(col_seen.begin(), col_seen.end(), 0);
    for (int r = 0; r < dim_; ++r) ++col_seen[index(r, c)];
    for (int m = 0; m < dim_; ++m)
      if (col_seen[m] != 1) return false;
  }
  return true;
}

bool SignedIndexTable::operator==(const SignedIndexTable& other) const {
  return dim_ == other.dim_ && idx_ == other.idx_ && sgn_ == other.sgn_;
}

std::string SignedIndexTable::to_text() const {
  std::ostringstream out;
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < dim_; ++c) {
      if (c) out << ' ';
      out << signed_entry(r, c);
    }
    out << '\n';
  }
  return out.str();
}

HyperNumber::HyperNumber(int dim) : comp_(static_cast<size_t>(dim), 0.0) {
  if (dim < 1) throw std::invalid_argument("hypercomplex dimension must be positive");
}

HyperNumber::HyperNumber(std::vector<double> components) : comp_(std::move(components)) {
  if (comp_.empty()) throw std::invalid_argument("hypercomplex value needs at least one component");
  for (double v : comp_) {
    if (!std::isfinite(v)) throw std::invalid_argument("hypercomplex components must be finite");
  }
}

HyperNumber HyperNumber::unit(int dim, int k, double s) {
  HyperNumber e(dim);
  if (k < 0 || k >= dim) throw std::invalid_argument("unit index out of range");
  e[k] = s;
  return e;
}

bool HyperNumber::is_zero() const {
  for (double v : comp_)
    if (v != 0.0) return false;
  return true;
}

HyperNumber hyper_mul(const HyperNumber& w, const HyperNumber& x,
                      const SignedIndexTable& table) {
  const int dim = table.dim();
  if (w.dim() != dim || x.dim() != dim) {
    throw std::invalid_argument("hyper_mul dimension mismatch");
  }
  HyperNumber y(dim);
  for (int r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < dim; ++c) {
      acc += table.sign(r, c) * w[table.index(r, c)] * x[c];
    }
    y[r] = acc;
  }
  return y;
}

HyperNumber conjugate(HyperNumber a) {
  for (int k = 1; k < a.dim(); ++k) a[k] = -a[k];
  return a;
}

std::optional<ZeroDivisorPair> find_zero_divisor(const SignedIndexTable& table) {
  const int dim = table.dim();
  struct Candidate {
    int i, j;
    double s;
  };
  std::vector<Candidate> candidates;
  for (int i = 1; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      for (double s : {1.0, -1.0}) candidates.push_back({i, j, s});

  for (const auto& cu : candidates) {
    HyperNumber u(dim);
    u[cu.i] = 1.0;
    u[cu.j] = cu.s;
    for (const auto& cv : candidates) {
      HyperNumber v(dim);
      v[cv.i] = 1.0;
      v[cv.j] = cv.s;
      if (hyper_mul(u, v, table).is_zero()) {
        return ZeroDivisorPair{u, v};
      }
    }
  }
  return std::nullopt;
}

}  // namespace sedenet
