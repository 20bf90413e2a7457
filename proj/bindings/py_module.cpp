#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qkdlab/classical.hpp"
#include "qkdlab/commit.hpp"
#include "qkdlab/harness.hpp"
#include "qkdlab/qkd.hpp"
#include "qkdlab/qsim.hpp"

namespace py = pybind11;
using namespace qkdlab;

namespace {

py::object big_int(const std::string& decimal) {
    return py::module_::import("builtins").attr("int")(decimal);
}

classical::ByteString to_bytes(const py::bytes& b) {
    const std::string s = b;
    return classical::ByteString(s.begin(), s.end());
}

py::bytes from_bytes(const classical::ByteString& b) {
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Seeded simulation laboratory for quantum key distribution, "
              "quantum bit commitment and classical cipher companions";

    py::register_exception<ProtocolViolation>(m, "ProtocolViolation");
    py::register_exception<TransportError>(m, "TransportError");
    py::register_exception<NegotiationError>(m, "NegotiationError");
    py::register_exception<KeyExhausted>(m, "KeyExhausted");
    py::register_exception<NotSemiprime>(m, "NotSemiprime");

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("child", &Rng::child, py::arg("label"))
        .def("next_u64", &Rng::next_u64)
        .def("next_double", &Rng::next_double)
        .def("next_bit", &Rng::next_bit)
        .def("next_below", &Rng::next_below, py::arg("n"))
        .def("poisson", &Rng::poisson, py::arg("mu"))
        .def_property_readonly("seed", &Rng::seed);

    // ---- qsim
    py::enum_<qsim::Basis>(m, "Basis")
        .value("RECTILINEAR", qsim::Basis::Rectilinear)
        .value("DIAGONAL", qsim::Basis::Diagonal);

    py::enum_<qsim::Polarization>(m, "Polarization")
        .value("H", qsim::Polarization::H)
        .value("V", qsim::Polarization::V)
        .value("D45", qsim::Polarization::D45)
        .value("D135", qsim::Polarization::D135);

    py::class_<qsim::PureState>(m, "PureState")
        .def(py::init([](std::complex<double> a_h, std::complex<double> a_v) {
                 return qsim::PureState{a_h, a_v};
             }),
             py::arg("a_h"), py::arg("a_v"))
        .def_readwrite("a_h", &qsim::PureState::a_h)
        .def_readwrite("a_v", &qsim::PureState::a_v)
        .def("norm_sq", &qsim::PureState::norm_sq)
        .def("__repr__", [](const qsim::PureState& s) {
            return "PureState(a_h=(" + std::to_string(s.a_h.real()) + "," +
                   std::to_string(s.a_h.imag()) + "), a_v=(" + std::to_string(s.a_v.real()) + "," +
                   std::to_string(s.a_v.imag()) + "))";
        });

    py::class_<qsim::TwoQubitState>(m, "TwoQubitState")
        .def(py::init([](std::array<std::complex<double>, 4> amps) {
                 qsim::TwoQubitState s;
                 s.a = amps;
                 return s;
             }),
             py::arg("amplitudes"))
        .def_property_readonly("amplitudes", [](const qsim::TwoQubitState& s) { return s.a; })
        .def("norm_sq", &qsim::TwoQubitState::norm_sq);

    m.def("polarization_from", &qsim::polarization_from, py::arg("bit"), py::arg("basis"));
    m.def("bit_of", &qsim::bit_of);
    m.def("basis_of", &qsim::basis_of);
    m.def("state_of", &qsim::state_of);
    m.def("prepare", &qsim::prepare, py::arg("bit"), py::arg("basis"));
    m.def("measure", [](const qsim::PureState& s, qsim::Basis b, Rng& rng) {
        const auto out = qsim::measure(s, b, rng);
        return py::make_tuple(out.bit, out.collapsed);
    });
    m.def("measure_angle", [](const qsim::PureState& s, double theta, Rng& rng) {
        const auto out = qsim::measure_angle(s, theta, rng);
        return py::make_tuple(out.bit, out.collapsed);
    });
    m.def("measure_via_ancilla", [](const qsim::PureState& s, qsim::Basis b, Rng& rng) {
        const auto out = qsim::measure_via_ancilla(s, b, rng);
        return py::make_tuple(out.bit, out.collapsed);
    });
    m.def("singlet", &qsim::singlet);
    m.def("tensor", &qsim::tensor);
    m.def("change_basis",
          py::overload_cast<const qsim::PureState&, qsim::Basis>(&qsim::change_basis));
    m.def("change_basis",
          py::overload_cast<const qsim::TwoQubitState&, qsim::Basis>(&qsim::change_basis));
    m.def("measure_pair", [](const qsim::TwoQubitState& s, qsim::Basis a, qsim::Basis b, Rng& rng) {
        const auto out = qsim::measure_pair(s, a, b, rng);
        return py::make_tuple(out.bit_a, out.bit_b);
    });
    m.def("measure_qubit", [](const qsim::TwoQubitState& s, int which, qsim::Basis b, Rng& rng) {
        const auto out = qsim::measure_qubit(s, which, b, rng);
        return py::make_tuple(out.bit, out.collapsed);
    });
    m.def("reduced_density", [](const qsim::TwoQubitState& s, int which) {
        const qsim::Mat2 rho = qsim::reduced_density(s, which);
        return std::vector<std::vector<std::complex<double>>>{{rho.at(0, 0), rho.at(0, 1)},
                                                              {rho.at(1, 0), rho.at(1, 1)}};
    });
    m.def("chsh_value", &qsim::chsh_value, py::arg("state"), py::arg("angles_a"),
          py::arg("angles_b"), py::arg("n_trials"), py::arg("rng"));

    // ---- channel
    py::class_<channel::Pulse>(m, "Pulse")
        .def(py::init<>())
        .def_readwrite("id", &channel::Pulse::id)
        .def_readwrite("photons", &channel::Pulse::photons)
        .def("count", &channel::Pulse::count);

    py::class_<channel::SourceConfig>(m, "SourceConfig")
        .def_static("ideal", &channel::SourceConfig::ideal)
        .def_static("weak_coherent", &channel::SourceConfig::weak_coherent, py::arg("mu"))
        .def_readonly("mu", &channel::SourceConfig::mu);

    py::class_<channel::ChannelConfig>(m, "ChannelConfig")
        .def(py::init([](double survive_prob, double flip_x_prob, double flip_z_prob) {
                 return channel::ChannelConfig{survive_prob, flip_x_prob, flip_z_prob};
             }),
             py::arg("survive_prob") = 1.0, py::arg("flip_x_prob") = 0.0,
             py::arg("flip_z_prob") = 0.0)
        .def_readwrite("survive_prob", &channel::ChannelConfig::survive_prob)
        .def_readwrite("flip_x_prob", &channel::ChannelConfig::flip_x_prob)
        .def_readwrite("flip_z_prob", &channel::ChannelConfig::flip_z_prob);

    py::enum_<channel::EveStrategy::Policy>(m, "InterceptPolicy")
        .value("ALWAYS_RECT", channel::EveStrategy::Policy::AlwaysRect)
        .value("ALWAYS_DIAG", channel::EveStrategy::Policy::AlwaysDiag)
        .value("RANDOM_BASIS", channel::EveStrategy::Policy::RandomBasis);

    py::class_<channel::EveStrategy>(m, "EveStrategy")
        .def_static("none", &channel::EveStrategy::none)
        .def_static("intercept_resend", &channel::EveStrategy::intercept_resend, py::arg("policy"))
        .def_static("photon_number_split", &channel::EveStrategy::photon_number_split);

    py::class_<channel::EveLog>(m, "EveLog")
        .def(py::init<>())
        .def("captured_count", &channel::EveLog::captured_count)
        .def("intercept_count", [](const channel::EveLog& log) { return log.intercepts.size(); });

    m.def("emit", &channel::emit, py::arg("source"), py::arg("id"), py::arg("bit"),
          py::arg("basis"), py::arg("rng"));
    m.def("transmit", &channel::transmit, py::arg("pulse"), py::arg("channel"), py::arg("rng"));
    m.def("eve_apply", &channel::eve_apply, py::arg("strategy"), py::arg("pulse"), py::arg("rng"),
          py::arg("log"));
    m.def("eve_finalize", &channel::eve_finalize, py::arg("log"), py::arg("announced_bases"),
          py::arg("rng"));

    // ---- qkd
    py::class_<qkd::ProtocolConfig>(m, "ProtocolConfig")
        .def(py::init<>())
        .def_readwrite("n_pulses", &qkd::ProtocolConfig::n_pulses)
        .def_readwrite("sample_fraction", &qkd::ProtocolConfig::sample_fraction)
        .def_readwrite("abort_threshold", &qkd::ProtocolConfig::abort_threshold)
        .def_readwrite("pa_safety", &qkd::ProtocolConfig::pa_safety)
        .def_readwrite("ec_passes", &qkd::ProtocolConfig::ec_passes)
        .def_readwrite("chsh_fraction", &qkd::ProtocolConfig::chsh_fraction);

    py::class_<qkd::SessionStats>(m, "SessionStats")
        .def_readonly("protocol", &qkd::SessionStats::protocol)
        .def_readonly("seed", &qkd::SessionStats::seed)
        .def_readonly("n_pulses", &qkd::SessionStats::n_pulses)
        .def_readonly("n_detected", &qkd::SessionStats::n_detected)
        .def_readonly("sifted_len", &qkd::SessionStats::sifted_len)
        .def_readonly("qber_est", &qkd::SessionStats::qber_est)
        .def_readonly("qber_true", &qkd::SessionStats::qber_true)
        .def_readonly("aborted", &qkd::SessionStats::aborted)
        .def_readonly("ec_leak_bits", &qkd::SessionStats::ec_leak_bits)
        .def_readonly("final_len", &qkd::SessionStats::final_len)
        .def_readonly("eve_accuracy", &qkd::SessionStats::eve_accuracy)
        .def_readonly("chsh", &qkd::SessionStats::chsh);

    py::class_<qkd::KeyMaterial>(m, "KeyMaterial")
        .def_readonly("bits", &qkd::KeyMaterial::bits)
        .def("hex", [](const qkd::KeyMaterial& k) { return qkd::key_to_hex(k.bits); });

    py::class_<qkd::SessionResult>(m, "SessionResult")
        .def_readonly("stats", &qkd::SessionResult::stats)
        .def_readonly("alice_key", &qkd::SessionResult::alice_key)
        .def_readonly("bob_key", &qkd::SessionResult::bob_key);

    m.def("sift", &qkd::sift, py::arg("alice_bases"), py::arg("bob_bases"),
          py::arg("detected_ids"));
    m.def("estimate_qber", [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                              const std::vector<std::uint64_t>& idx) {
        const auto est = qkd::estimate_qber(a, b, idx);
        return py::make_tuple(est.qber, est.remaining);
    });
    m.def("check_abort", [](double qber, double threshold) {
        return qkd::check_abort(qber, threshold) == qkd::Verdict::Abort;
    });
    m.def("reconcile", [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                          double qber, int passes, std::uint64_t perm_seed) {
        const auto res = qkd::reconcile(a, b, qber, passes, Rng(perm_seed));
        return py::make_tuple(res.bob_corrected, res.leak_bits);
    });
    m.def("fingerprint", &qkd::fingerprint, py::arg("bits"), py::arg("offset_seed"));
    m.def("verify_equal", &qkd::verify_equal, py::arg("alice_bits"), py::arg("bob_bits"),
          py::arg("offset_seed"));
    m.def("binary_entropy", &qkd::binary_entropy);
    m.def("pa_output_len", &qkd::pa_output_len, py::arg("n"), py::arg("leak_bits"),
          py::arg("qber_est"), py::arg("safety"));
    m.def("privacy_amplify", &qkd::privacy_amplify, py::arg("bits"), py::arg("leak_bits"),
          py::arg("qber_est"), py::arg("safety"), py::arg("pa_seed"));
    m.def("run_bb84", &qkd::run_bb84, py::arg("config"), py::arg("source"), py::arg("channel"),
          py::arg("eve"), py::arg("rng"));
    m.def("run_b92", &qkd::run_b92, py::arg("config"), py::arg("source"), py::arg("channel"),
          py::arg("eve"), py::arg("rng"));
    m.def("run_epr", &qkd::run_epr, py::arg("config"), py::arg("channel"), py::arg("eve"),
          py::arg("rng"));
    m.def("key_to_hex", &qkd::key_to_hex);

    // ---- commit
    py::enum_<commit::VerifyResult>(m, "VerifyResult")
        .value("ACCEPT", commit::VerifyResult::Accept)
        .value("REJECT", commit::VerifyResult::Reject);

    py::class_<commit::CommitRecord>(m, "CommitRecord")
        .def_readonly("committed_bit", &commit::CommitRecord::committed_bit)
        .def_readonly("coin_flips", &commit::CommitRecord::coin_flips)
        .def_property_readonly("opened", [](const commit::CommitRecord& r) { return r.opened; });

    py::class_<commit::BobHolding>(m, "BobHolding")
        .def("size", &commit::BobHolding::size);

    py::class_<commit::Opening>(m, "Opening")
        .def_readonly("claimed_basis", &commit::Opening::claimed_basis)
        .def_readonly("claimed_bits", &commit::Opening::claimed_bits);

    py::class_<commit::Commitment>(m, "Commitment")
        .def_readwrite("record", &commit::Commitment::record)
        .def_readwrite("holding", &commit::Commitment::holding);

    m.def("commit", &commit::commit, py::arg("bit"), py::arg("n"), py::arg("rng"));
    m.def("open_honest", &commit::open_honest);
    m.def("verify", &commit::verify, py::arg("holding"), py::arg("opening"), py::arg("rng"));
    m.def("cheat_classical", &commit::cheat_classical, py::arg("record"), py::arg("desired_bit"));
    m.def("cheat_epr_commit", &commit::cheat_epr_commit, py::arg("n"), py::arg("rng"));
    m.def("cheat_epr_open", &commit::cheat_epr_open, py::arg("record"), py::arg("desired_bit"),
          py::arg("rng"));
    m.def("bob_distinguish", &commit::bob_distinguish, py::arg("ensemble_bit0"),
          py::arg("ensemble_bit1"));

    // ---- classical ciphers
    m.def("otp_apply", [](const py::bytes& msg, const py::bytes& key) {
        return from_bytes(classical::otp_apply(to_bytes(msg), to_bytes(key)));
    });
    m.def("two_time_pad", [](const py::bytes& c1, const py::bytes& c2) {
        return from_bytes(classical::two_time_pad(to_bytes(c1), to_bytes(c2)));
    });
    m.def("caesar", [](const std::string& text, int shift, bool decode) {
        return classical::caesar(text, shift,
                                 decode ? classical::CaesarDirection::Decode
                                        : classical::CaesarDirection::Encode);
    }, py::arg("text"), py::arg("shift") = 3, py::arg("decode") = false);
    m.def("rsa_keygen", [](std::uint64_t p, std::uint64_t q, std::uint64_t e) {
        const auto kp = classical::rsa_keygen(p, q, e);
        return py::make_tuple(kp.pub.n, kp.pub.e, kp.priv.d);
    });
    m.def("rsa_encrypt", [](std::uint64_t msg, std::uint64_t n, std::uint64_t e) {
        return classical::rsa_encrypt(msg, {n, e});
    });
    m.def("rsa_decrypt", [](std::uint64_t y, std::uint64_t n, std::uint64_t d) {
        return classical::rsa_decrypt(y, {d, n});
    });
    m.def("rsa_crack", [](std::uint64_t n, std::uint64_t e) {
        return classical::rsa_crack({n, e}).d;
    });
    m.def("mod_pow", &classical::mod_pow);
    m.def("search_cost", [](unsigned bits) {
        const auto cost = classical::search_cost(bits);
        return py::make_tuple(big_int(cost.classical_str()), big_int(cost.grover_str()));
    });

    // ---- harness
    m.def("run_protocol",
          [](const std::string& protocol, std::uint64_t pulses, std::uint64_t seed,
             const std::string& eve, double noise, double loss, double mu, double threshold,
             double sample_fraction, int ec_passes, std::uint32_t pa_safety, double chsh_fraction) {
              harness::RunSpec spec;
              spec.protocol = protocol;
              spec.config.n_pulses = pulses;
              spec.config.abort_threshold = threshold;
              spec.config.sample_fraction = sample_fraction;
              spec.config.ec_passes = ec_passes;
              spec.config.pa_safety = pa_safety;
              spec.config.chsh_fraction = chsh_fraction;
              spec.eve = harness::eve_from_string(eve);
              spec.chan.flip_x_prob = noise;
              spec.chan.flip_z_prob = noise;
              spec.chan.survive_prob = 1.0 - loss;
              if (mu >= 0.0) spec.source = channel::SourceConfig::weak_coherent(mu);
              spec.seed = seed;
              return harness::run_session(spec);
          },
          py::arg("protocol"), py::arg("pulses"), py::arg("seed"), py::arg("eve") = "none",
          py::arg("noise") = 0.0, py::arg("loss") = 0.0, py::arg("mu") = -1.0,
          py::arg("threshold") = 0.10, py::arg("sample_fraction") = 0.5, py::arg("ec_passes") = 2,
          py::arg("pa_safety") = 30, py::arg("chsh_fraction") = 0.25);
}
