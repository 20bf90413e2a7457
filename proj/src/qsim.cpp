#include "qkdlab/qsim.hpp"

#include <cmath>
#include <stdexcept>

namespace qkdlab::qsim {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void require_normalized(double norm_sq) {
    if (std::abs(norm_sq - 1.0) > kNormTol) {
        throw std::invalid_argument("state is not normalized");
    }
}

// Analyzer basis vectors for angle t: e0 = (cos t, sin t), e1 = (-sin t, cos t).
struct Analyzer {
    double c;
    double s;
    Complex project0(const PureState& st) const { return c * st.a_h + s * st.a_v; }
    Complex project1(const PureState& st) const { return -s * st.a_h + c * st.a_v; }
};

Analyzer analyzer_for(double theta_deg) {
    const double t = theta_deg * kPi / 180.0;
    return {std::cos(t), std::sin(t)};
}

} // namespace

Polarization polarization_from(int bit, Basis basis) {
    if (basis == Basis::Rectilinear) return bit == 0 ? Polarization::H : Polarization::V;
    return bit == 0 ? Polarization::D45 : Polarization::D135;
}

int bit_of(Polarization p) {
    return (p == Polarization::V || p == Polarization::D135) ? 1 : 0;
}

Basis basis_of(Polarization p) {
    return (p == Polarization::H || p == Polarization::V) ? Basis::Rectilinear : Basis::Diagonal;
}

Complex inner(const PureState& x, const PureState& y) {
    return std::conj(x.a_h) * y.a_h + std::conj(x.a_v) * y.a_v;
}

bool approx_equal_up_to_phase(const PureState& x, const PureState& y, double tol) {
    return std::abs(std::abs(inner(x, y)) - 1.0) <= tol;
}

PureState state_of(Polarization p) {
    switch (p) {
        case Polarization::H: return {1.0, 0.0};
        case Polarization::V: return {0.0, 1.0};
        case Polarization::D45: return {kInvSqrt2, kInvSqrt2};
        case Polarization::D135: return {kInvSqrt2, -kInvSqrt2};
    }
    throw std::invalid_argument("bad polarization");
}

PureState prepare(int bit, Basis basis) { return state_of(polarization_from(bit, basis)); }

PureState flip_x(const PureState& s) { return {s.a_v, s.a_h}; }
PureState flip_z(const PureState& s) { return {s.a_h, -s.a_v}; }

MeasureOutcome measure(const PureState& state, Basis basis, Rng& rng) {
    require_normalized(state.norm_sq());
    const Analyzer an = analyzer_for(analyzer_angle_deg(basis));
    const double p0 = std::norm(an.project0(state));
    const int bit = rng.next_double() < p0 ? 0 : 1;
    return {bit, state_of(polarization_from(bit, basis))};
}

MeasureOutcome measure_angle(const PureState& state, double theta_deg, Rng& rng) {
    require_normalized(state.norm_sq());
    const Analyzer an = analyzer_for(theta_deg);
    const double p0 = std::norm(an.project0(state));
    if (rng.next_double() < p0) return {0, {an.c, an.s}};
    return {1, {-an.s, an.c}};
}

MeasureOutcome measure_via_ancilla(const PureState& state, Basis basis, Rng& rng) {
    require_normalized(state.norm_sq());
    // Adjoin |0> and apply the controlled copy in the measurement basis:
    // c0|e0,0> + c1|e1,0>  ->  c0|e0,0> + c1|e1,1>.
    const Analyzer an = analyzer_for(analyzer_angle_deg(basis));
    const Complex c0 = an.project0(state);
    const Complex c1 = an.project1(state);
    const PureState e0{an.c, an.s};
    const PureState e1{-an.s, an.c};
    TwoQubitState joint{};
    joint.a[0] = c0 * e0.a_h; // system H, ancilla 0
    joint.a[1] = c1 * e1.a_h; // system H, ancilla 1
    joint.a[2] = c0 * e0.a_v; // system V, ancilla 0
    joint.a[3] = c1 * e1.a_v; // system V, ancilla 1
    // Read the ancilla and discard it; the system is left in the matching
    // analyzer eigenvector, up to a global phase which we strip.
    const QubitOutcome anc = measure_qubit_angle(joint, 1, 0.0, rng);
    const std::size_t off = anc.bit == 0 ? 0 : 1;
    PureState system{anc.collapsed.a[off], anc.collapsed.a[2 + off]};
    const Complex phase = inner(state_of(polarization_from(anc.bit, basis)), system);
    system.a_h /= phase;
    system.a_v /= phase;
    return {anc.bit, system};
}

double TwoQubitState::norm_sq() const {
    double n = 0.0;
    for (const auto& amp : a) n += std::norm(amp);
    return n;
}

Complex inner(const TwoQubitState& x, const TwoQubitState& y) {
    Complex r{0.0, 0.0};
    for (int i = 0; i < 4; ++i) r += std::conj(x.a[static_cast<std::size_t>(i)]) * y.a[static_cast<std::size_t>(i)];
    return r;
}

bool approx_equal_up_to_phase(const TwoQubitState& x, const TwoQubitState& y, double tol) {
    return std::abs(std::abs(inner(x, y)) - 1.0) <= tol;
}

TwoQubitState singlet() {
    TwoQubitState s{};
    s.a[1] = Complex{kInvSqrt2, 0.0};
    s.a[2] = Complex{-kInvSqrt2, 0.0};
    return s;
}

TwoQubitState tensor(const PureState& first, const PureState& second) {
    TwoQubitState s{};
    s.a[0] = first.a_h * second.a_h;
    s.a[1] = first.a_h * second.a_v;
    s.a[2] = first.a_v * second.a_h;
    s.a[3] = first.a_v * second.a_v;
    return s;
}

PureState change_basis(const PureState& state, Basis basis) {
    if (basis == Basis::Rectilinear) return state;
    return {kInvSqrt2 * (state.a_h + state.a_v), kInvSqrt2 * (state.a_h - state.a_v)};
}

TwoQubitState change_basis(const TwoQubitState& state, Basis basis) {
    if (basis == Basis::Rectilinear) return state;
    // (U x U) with U the rectilinear<->diagonal conversion, applied one qubit
    // at a time.
    TwoQubitState t{};
    // first qubit
    t.a[0] = kInvSqrt2 * (state.a[0] + state.a[2]);
    t.a[1] = kInvSqrt2 * (state.a[1] + state.a[3]);
    t.a[2] = kInvSqrt2 * (state.a[0] - state.a[2]);
    t.a[3] = kInvSqrt2 * (state.a[1] - state.a[3]);
    // second qubit
    TwoQubitState u{};
    u.a[0] = kInvSqrt2 * (t.a[0] + t.a[1]);
    u.a[1] = kInvSqrt2 * (t.a[0] - t.a[1]);
    u.a[2] = kInvSqrt2 * (t.a[2] + t.a[3]);
    u.a[3] = kInvSqrt2 * (t.a[2] - t.a[3]);
    return u;
}

void apply_x(TwoQubitState& state, int which) {
    if (which == 0) {
        std::swap(state.a[0], state.a[2]);
        std::swap(state.a[1], state.a[3]);
    } else {
        std::swap(state.a[0], state.a[1]);
        std::swap(state.a[2], state.a[3]);
    }
}

void apply_z(TwoQubitState& state, int which) {
    if (which == 0) {
        state.a[2] = -state.a[2];
        state.a[3] = -state.a[3];
    } else {
        state.a[1] = -state.a[1];
        state.a[3] = -state.a[3];
    }
}

QubitOutcome measure_qubit_angle(const TwoQubitState& state, int which, double theta_deg, Rng& rng) {
    require_normalized(state.norm_sq());
    const Analyzer an = analyzer_for(theta_deg);
    // Components of the measured qubit along e0/e1, with the partner qubit
    // amplitudes carried along.
    Complex c0_partner[2];
    Complex c1_partner[2];
    if (which == 0) {
        // measured amplitudes indexed by partner state m: a[j*2 + m]
        for (int m = 0; m < 2; ++m) {
            c0_partner[m] = an.c * state.a[static_cast<std::size_t>(m)] + an.s * state.a[static_cast<std::size_t>(2 + m)];
            c1_partner[m] = -an.s * state.a[static_cast<std::size_t>(m)] + an.c * state.a[static_cast<std::size_t>(2 + m)];
        }
    } else {
        for (int m = 0; m < 2; ++m) {
            c0_partner[m] = an.c * state.a[static_cast<std::size_t>(2 * m)] + an.s * state.a[static_cast<std::size_t>(2 * m + 1)];
            c1_partner[m] = -an.s * state.a[static_cast<std::size_t>(2 * m)] + an.c * state.a[static_cast<std::size_t>(2 * m + 1)];
        }
    }
    const double p0 = std::norm(c0_partner[0]) + std::norm(c0_partner[1]);
    const int bit = rng.next_double() < p0 ? 0 : 1;
    const Complex* kept = bit == 0 ? c0_partner : c1_partner;
    const double renorm = 1.0 / std::sqrt(bit == 0 ? p0 : 1.0 - p0);
    const PureState eigen = bit == 0 ? PureState{an.c, an.s} : PureState{-an.s, an.c};
    PureState partner{kept[0] * renorm, kept[1] * renorm};
    TwoQubitState collapsed = which == 0 ? tensor(eigen, partner) : tensor(partner, eigen);
    return {bit, collapsed};
}

QubitOutcome measure_qubit(const TwoQubitState& state, int which, Basis basis, Rng& rng) {
    return measure_qubit_angle(state, which, analyzer_angle_deg(basis), rng);
}

PairOutcome measure_pair(const TwoQubitState& state, Basis basis_a, Basis basis_b, Rng& rng) {
    const QubitOutcome first = measure_qubit(state, 0, basis_a, rng);
    const QubitOutcome second = measure_qubit(first.collapsed, 1, basis_b, rng);
    return {first.bit, second.bit};
}

Mat2 reduced_density(const TwoQubitState& state, int which) {
    require_normalized(state.norm_sq());
    Mat2 rho;
    if (which == 0) {
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int m = 0; m < 2; ++m)
                    rho.at(j, k) += state.a[static_cast<std::size_t>(2 * j + m)] *
                                    std::conj(state.a[static_cast<std::size_t>(2 * k + m)]);
    } else {
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int m = 0; m < 2; ++m)
                    rho.at(j, k) += state.a[static_cast<std::size_t>(2 * m + j)] *
                                    std::conj(state.a[static_cast<std::size_t>(2 * m + k)]);
    }
    return rho;
}

double trace_distance(const Mat2& x, const Mat2& y) {
    // Eigenvalues of the Hermitian difference, closed form for 2x2.
    const Complex d00 = x.m[0] - y.m[0];
    const Complex d01 = x.m[1] - y.m[1];
    const Complex d11 = x.m[3] - y.m[3];
    const double a = d00.real();
    const double d = d11.real();
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(d01));
    return 0.5 * (std::abs(mean + disc) + std::abs(mean - disc));
}

double chsh_value(const TwoQubitState& state, std::pair<double, double> angles_a,
                  std::pair<double, double> angles_b, std::uint64_t n_trials, Rng& rng) {
    if (n_trials < 1) throw std::invalid_argument("chsh_value needs n_trials >= 1");
    const double as[2] = {angles_a.first, angles_a.second};
    const double bs[2] = {angles_b.first, angles_b.second};
    double corr_sum[4] = {0, 0, 0, 0};
    std::uint64_t counts[4] = {0, 0, 0, 0};
    for (std::uint64_t t = 0; t < n_trials; ++t) {
        const int pair = static_cast<int>(t % 4);
        const int ia = pair >> 1;
        const int ib = pair & 1;
        const QubitOutcome oa = measure_qubit_angle(state, 0, as[ia], rng);
        const QubitOutcome ob = measure_qubit_angle(oa.collapsed, 1, bs[ib], rng);
        const int product = (oa.bit == ob.bit) ? 1 : -1;
        corr_sum[pair] += product;
        ++counts[pair];
    }
    double e[4];
    for (int i = 0; i < 4; ++i) e[i] = counts[i] ? corr_sum[i] / static_cast<double>(counts[i]) : 0.0;
    // pairs indexed (a,b)=0, (a,b')=1, (a',b)=2, (a',b')=3
    return e[0] - e[1] + e[2] + e[3];
}

} // namespace qkdlab::qsim
