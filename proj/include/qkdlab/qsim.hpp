#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <utility>

#include "qkdlab/rng.hpp"

namespace qkdlab::qsim {

using Complex = std::complex<double>;

// Normalization tolerance for state vectors and density matrices.
inline constexpr double kNormTol = 1e-9;

// The two conjugate polarization bases. Rectilinear analyzes at 0 degrees,
// Diagonal at 45 degrees.
enum class Basis : std::uint8_t { Rectilinear = 0, Diagonal = 1 };

inline double analyzer_angle_deg(Basis b) { return b == Basis::Rectilinear ? 0.0 : 45.0; }
inline Basis other_basis(Basis b) { return b == Basis::Rectilinear ? Basis::Diagonal : Basis::Rectilinear; }

enum class Polarization : std::uint8_t { H = 0, V = 1, D45 = 2, D135 = 3 };

// Fixed bit convention: H=(0,Rect), V=(1,Rect), D45=(0,Diag), D135=(1,Diag).
Polarization polarization_from(int bit, Basis basis);
int bit_of(Polarization p);
Basis basis_of(Polarization p);

// Single polarization qubit, amplitudes in the {H, V} basis.
struct PureState {
    Complex a_h{1.0, 0.0};
    Complex a_v{0.0, 0.0};

    double norm_sq() const { return std::norm(a_h) + std::norm(a_v); }
};

Complex inner(const PureState& x, const PureState& y);
bool approx_equal_up_to_phase(const PureState& x, const PureState& y, double tol = kNormTol);

PureState state_of(Polarization p);
PureState prepare(int bit, Basis basis);

// Pauli flips used by the noise channel.
PureState flip_x(const PureState& s); // swaps a_h and a_v
PureState flip_z(const PureState& s); // negates a_v

struct MeasureOutcome {
    int bit;
    PureState collapsed;
};

// Born-rule measurement in a conjugate basis; collapses to the polarization
// eigenvector of the outcome. Throws std::invalid_argument if the input is
// not normalized within kNormTol.
MeasureOutcome measure(const PureState& state, Basis basis, Rng& rng);

// Born-rule measurement with an arbitrary analyzer angle; the outcome basis
// vectors are (cos t, sin t) for bit 0 and (-sin t, cos t) for bit 1.
MeasureOutcome measure_angle(const PureState& state, double theta_deg, Rng& rng);

// Measurement realized unitarily on an enlarged system: adjoin an ancilla
// qubit, apply a controlled copy in the measurement basis, read the ancilla
// and discard it. Distributionally identical to measure().
MeasureOutcome measure_via_ancilla(const PureState& state, Basis basis, Rng& rng);

// Two polarization qubits; amplitude order (HH, HV, VH, VV).
struct TwoQubitState {
    std::array<Complex, 4> a{};

    double norm_sq() const;
};

Complex inner(const TwoQubitState& x, const TwoQubitState& y);
bool approx_equal_up_to_phase(const TwoQubitState& x, const TwoQubitState& y, double tol = kNormTol);

// The EPR pair (|HV> - |VH>)/sqrt(2).
TwoQubitState singlet();

TwoQubitState tensor(const PureState& first, const PureState& second);

// Re-expresses amplitudes in the target basis (per qubit for the two-qubit
// overload). The conversion matrix is involutory, so applying it twice
// returns the original amplitudes.
PureState change_basis(const PureState& state, Basis basis);
TwoQubitState change_basis(const TwoQubitState& state, Basis basis);

void apply_x(TwoQubitState& state, int which);
void apply_z(TwoQubitState& state, int which);

struct QubitOutcome {
    int bit;
    TwoQubitState collapsed;
};

// Partial Born-rule measurement of one qubit (0 = first, 1 = second) of a
// joint state; the other qubit collapses consistently.
QubitOutcome measure_qubit(const TwoQubitState& state, int which, Basis basis, Rng& rng);
QubitOutcome measure_qubit_angle(const TwoQubitState& state, int which, double theta_deg, Rng& rng);

struct PairOutcome {
    int bit_a;
    int bit_b;
};

// Joint Born-rule measurement of both qubits.
PairOutcome measure_pair(const TwoQubitState& state, Basis basis_a, Basis basis_b, Rng& rng);

// 2x2 complex matrix, row-major.
struct Mat2 {
    std::array<Complex, 4> m{};

    Complex& at(int r, int c) { return m[static_cast<std::size_t>(r * 2 + c)]; }
    const Complex& at(int r, int c) const { return m[static_cast<std::size_t>(r * 2 + c)]; }
    Complex trace() const { return m[0] + m[3]; }
};

// Partial trace over the other subsystem (which: 0 keeps the first qubit).
Mat2 reduced_density(const TwoQubitState& state, int which);

// Trace distance between two Hermitian 2x2 matrices.
double trace_distance(const Mat2& x, const Mat2& y);

// Monte-Carlo CHSH estimate S = E(a,b) - E(a,b') + E(a',b) + E(a',b'), where
// E is the +/-1 correlation of angle measurements on the two halves. Trials
// are split evenly across the four angle pairs. n_trials >= 1.
double chsh_value(const TwoQubitState& state, std::pair<double, double> angles_a,
                  std::pair<double, double> angles_b, std::uint64_t n_trials, Rng& rng);

} // namespace qkdlab::qsim
