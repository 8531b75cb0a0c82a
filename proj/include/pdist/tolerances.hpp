#pragma once

// Central numerical tolerances. Everything structural (normalization,
// hermiticity, unitarity) is held to kStructural; entropy identities and
// security-distance assertions use the looser kEntropic.

namespace pdist::tol {

inline constexpr double kStructural = 1e-10;
inline constexpr double kEntropic = 1e-9;
inline constexpr double kProbability = 1e-12;

// Eigenvalues below this are treated as exact zeros (entropy, pseudo-inverse
// square roots). Negative eigenvalues of magnitude <= kStructural are clamped;
// anything more negative is an error.
inline constexpr double kEigenFloor = 1e-12;

inline constexpr double kPovmCompleteness = 1e-9;
inline constexpr double kNeumarkDefect = 1e-8;

// A key rate counts as positive in threshold bisection above this floor
// (R(q=1/2) is an exact analytic zero, so the floor only has to clear
// rounding noise).
inline constexpr double kRatePositive = 1e-12;

// Largest dimension at which DensityOperator construction runs a full
// spectral positivity check; beyond it the check happens at the point of use
// (entropy, fidelity, purification).
inline constexpr long kSpectralCheckDim = 64;

// Dense-representation budget: no single state vector, operator or block
// family may exceed this many complex entries.
inline constexpr long long kMaxDenseEntries = 1LL << 24;

}  // namespace pdist::tol
