#include "qkdlab/harness.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "qkdlab/commit.hpp"

namespace qkdlab::harness {

using ordered_json = nlohmann::ordered_json;

void RunSpec::validate() const {
    if (protocol != "bb84" && protocol != "b92" && protocol != "epr") {
        throw std::invalid_argument("protocol: must be bb84, b92 or epr");
    }
    config.validate();
    chan.validate();
    if (source.kind == channel::SourceConfig::Kind::WeakCoherent && source.mu < 0.0) {
        throw std::invalid_argument("source.mu: must be >= 0");
    }
    if (format != "json" && format != "csv") {
        throw std::invalid_argument("format: must be json or csv");
    }
}

std::string eve_to_string(const channel::EveStrategy& eve) {
    using K = channel::EveStrategy::Kind;
    using P = channel::EveStrategy::Policy;
    switch (eve.kind) {
        case K::None: return "none";
        case K::PhotonNumberSplit: return "pns";
        case K::InterceptResend:
            switch (eve.policy) {
                case P::AlwaysRect: return "intercept-rect";
                case P::AlwaysDiag: return "intercept-diag";
                default: return "intercept-random";
            }
    }
    return "none";
}

channel::EveStrategy eve_from_string(const std::string& name) {
    using S = channel::EveStrategy;
    if (name == "none") return S::none();
    if (name == "pns") return S::photon_number_split();
    if (name == "intercept-rect") return S::intercept_resend(S::Policy::AlwaysRect);
    if (name == "intercept-diag") return S::intercept_resend(S::Policy::AlwaysDiag);
    if (name == "intercept-random") return S::intercept_resend(S::Policy::RandomBasis);
    throw std::invalid_argument(
        "eve: expected none, intercept-rect, intercept-diag, intercept-random or pns");
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

const char* kCsvColumns =
    "protocol,seed,n_pulses,source,mu,survive_prob,flip_x_prob,flip_z_prob,eve,"
    "sample_fraction,abort_threshold,pa_safety,ec_passes,chsh_fraction,"
    "n_detected,sifted_len,qber_est,qber_true,aborted,ec_leak_bits,final_len,"
    "eve_accuracy,chsh";

std::string source_name(const channel::SourceConfig& source) {
    return source.kind == channel::SourceConfig::Kind::IdealSingle ? "ideal" : "weak-coherent";
}

} // namespace

std::string stats_csv_header() { return kCsvColumns; }

std::string stats_to_csv_row(const StatsRecord& record) {
    const RunSpec& s = record.spec;
    const qkd::SessionStats& st = record.stats;
    std::ostringstream row;
    row << s.protocol << ',' << st.seed << ',' << s.config.n_pulses << ',' << source_name(s.source)
        << ',' << format_double(s.source.mu) << ',' << format_double(s.chan.survive_prob) << ','
        << format_double(s.chan.flip_x_prob) << ',' << format_double(s.chan.flip_z_prob) << ','
        << eve_to_string(s.eve) << ',' << format_double(s.config.sample_fraction) << ','
        << format_double(s.config.abort_threshold) << ',' << s.config.pa_safety << ','
        << s.config.ec_passes << ',' << format_double(s.config.chsh_fraction) << ','
        << st.n_detected << ',' << st.sifted_len << ',' << format_double(st.qber_est) << ','
        << (st.qber_true ? format_double(*st.qber_true) : "") << ',' << (st.aborted ? 1 : 0) << ','
        << st.ec_leak_bits << ',' << st.final_len << ','
        << (st.eve_accuracy ? format_double(*st.eve_accuracy) : "") << ','
        << (st.chsh ? format_double(*st.chsh) : "");
    return row.str();
}

std::string stats_to_json(const StatsRecord& record) {
    const RunSpec& s = record.spec;
    const qkd::SessionStats& st = record.stats;
    ordered_json j;
    j["protocol"] = s.protocol;
    j["seed"] = st.seed;
    j["n_pulses"] = s.config.n_pulses;
    j["source"] = source_name(s.source);
    j["mu"] = s.source.mu;
    j["survive_prob"] = s.chan.survive_prob;
    j["flip_x_prob"] = s.chan.flip_x_prob;
    j["flip_z_prob"] = s.chan.flip_z_prob;
    j["eve"] = eve_to_string(s.eve);
    j["sample_fraction"] = s.config.sample_fraction;
    j["abort_threshold"] = s.config.abort_threshold;
    j["pa_safety"] = s.config.pa_safety;
    j["ec_passes"] = s.config.ec_passes;
    j["chsh_fraction"] = s.config.chsh_fraction;
    j["n_detected"] = st.n_detected;
    j["sifted_len"] = st.sifted_len;
    j["qber_est"] = st.qber_est;
    if (st.qber_true) j["qber_true"] = *st.qber_true;
    else j["qber_true"] = nullptr;
    j["aborted"] = st.aborted;
    j["ec_leak_bits"] = st.ec_leak_bits;
    j["final_len"] = st.final_len;
    if (st.eve_accuracy) j["eve_accuracy"] = *st.eve_accuracy;
    else j["eve_accuracy"] = nullptr;
    if (st.chsh) j["chsh"] = *st.chsh;
    else j["chsh"] = nullptr;
    return j.dump();
}

qkd::SessionResult run_session(const RunSpec& spec) {
    spec.validate();
    const Rng rng(spec.seed);
    if (spec.protocol == "bb84") {
        return qkd::run_bb84(spec.config, spec.source, spec.chan, spec.eve, rng);
    }
    if (spec.protocol == "b92") {
        return qkd::run_b92(spec.config, spec.source, spec.chan, spec.eve, rng);
    }
    return qkd::run_epr(spec.config, spec.chan, spec.eve, rng);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_key_file(const std::string& path, const qkd::KeyMaterial& key) {
    write_text_file(path, qkd::key_to_hex(key.bits) + "\n");
}

StatsRecord run(const RunSpec& spec) {
    qkd::SessionResult result = run_session(spec);
    StatsRecord record{spec, result.stats};
    if (!spec.out.empty()) {
        if (spec.format == "csv") {
            write_text_file(spec.out + ".stats.csv",
                            stats_csv_header() + "\n" + stats_to_csv_row(record) + "\n");
        } else {
            write_text_file(spec.out + ".stats.json", stats_to_json(record) + "\n");
        }
        if (result.alice_key && result.bob_key) {
            write_key_file(spec.out + ".alice.key", *result.alice_key);
            write_key_file(spec.out + ".bob.key", *result.bob_key);
        }
    }
    return record;
}

bool is_sweepable(const std::string& parameter) {
    return parameter == "noise" || parameter == "mu" || parameter == "t" ||
           parameter == "threshold" || parameter == "n_pulses";
}

RunSpec apply_parameter(RunSpec spec, const std::string& parameter, double value) {
    if (parameter == "noise") {
        spec.chan.flip_x_prob = value;
        spec.chan.flip_z_prob = value;
    } else if (parameter == "mu") {
        spec.source = channel::SourceConfig::weak_coherent(value);
    } else if (parameter == "t") {
        spec.chan.survive_prob = value;
    } else if (parameter == "threshold") {
        spec.config.abort_threshold = value;
    } else if (parameter == "n_pulses") {
        if (value < 1) throw std::invalid_argument("n_pulses must be >= 1");
        spec.config.n_pulses = static_cast<std::uint64_t>(value);
    } else {
        throw std::invalid_argument("unknown sweep parameter: " + parameter);
    }
    return spec;
}

std::vector<StatsRecord> sweep(const RunSpec& base, const std::string& parameter,
                               const std::vector<double>& values) {
    if (!is_sweepable(parameter)) {
        throw std::invalid_argument("unknown sweep parameter: " + parameter);
    }
    std::vector<std::future<StatsRecord>> futures;
    futures.reserve(values.size());
    const Rng master(base.seed);
    for (std::size_t i = 0; i < values.size(); ++i) {
        RunSpec child = apply_parameter(base, parameter, values[i]);
        child.out.clear();
        child.seed = master.child("sweep-" + std::to_string(i)).seed();
        futures.push_back(std::async(std::launch::async, [child] {
            qkd::SessionResult result = run_session(child);
            return StatsRecord{child, result.stats};
        }));
    }
    std::vector<StatsRecord> records;
    records.reserve(values.size());
    for (auto& f : futures) records.push_back(f.get());
    return records;
}

RunSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config file is not valid json: " + std::string(e.what()));
    }
    RunSpec spec;
    try {
        if (j.contains("protocol")) spec.protocol = j["protocol"].get<std::string>();
        if (j.contains("pulses")) spec.config.n_pulses = j["pulses"].get<std::uint64_t>();
        if (j.contains("sample_fraction")) spec.config.sample_fraction = j["sample_fraction"].get<double>();
        if (j.contains("threshold")) spec.config.abort_threshold = j["threshold"].get<double>();
        if (j.contains("pa_safety")) spec.config.pa_safety = j["pa_safety"].get<std::uint32_t>();
        if (j.contains("ec_passes")) spec.config.ec_passes = j["ec_passes"].get<int>();
        if (j.contains("chsh_fraction")) spec.config.chsh_fraction = j["chsh_fraction"].get<double>();
        if (j.contains("mu")) spec.source = channel::SourceConfig::weak_coherent(j["mu"].get<double>());
        if (j.contains("loss")) spec.chan.survive_prob = 1.0 - j["loss"].get<double>();
        if (j.contains("noise")) {
            const double p = j["noise"].get<double>();
            spec.chan.flip_x_prob = p;
            spec.chan.flip_z_prob = p;
        }
        if (j.contains("eve")) spec.eve = eve_from_string(j["eve"].get<std::string>());
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) spec.out = j["out"].get<std::string>();
        if (j.contains("format")) spec.format = j["format"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("bad config value: " + std::string(e.what()));
    }
    return spec;
}

CommitDemoReport commit_demo(const CommitDemoSpec& spec) {
    if (spec.cheat != "none" && spec.cheat != "classical" && spec.cheat != "epr") {
        throw std::invalid_argument("cheat: must be none, classical or epr");
    }
    if (spec.photons == 0 || spec.trials == 0) {
        throw std::invalid_argument("photons and trials must be >= 1");
    }
    CommitDemoReport report;
    report.spec = spec;
    Rng rng = Rng(spec.seed).child("commit-demo");
    if (spec.cheat == "none") {
        for (std::size_t t = 0; t < spec.trials; ++t) {
            commit::Commitment c = commit::commit(spec.bit, spec.photons, rng);
            const commit::Opening opening = commit::open_honest(c.record);
            if (commit::verify(c.holding, opening, rng) == commit::VerifyResult::Accept) {
                ++report.accepts;
            }
        }
    } else if (spec.cheat == "classical") {
        for (std::size_t t = 0; t < spec.trials; ++t) {
            commit::Commitment c = commit::commit(spec.bit, spec.photons, rng);
            const commit::Opening opening = commit::cheat_classical(c.record, 1 - spec.bit);
            if (commit::verify(c.holding, opening, rng) == commit::VerifyResult::Accept) {
                ++report.accepts;
            }
        }
    } else {
        for (int desired = 0; desired <= 1; ++desired) {
            for (std::size_t t = 0; t < spec.trials; ++t) {
                commit::Commitment c = commit::cheat_epr_commit(spec.photons, rng);
                const commit::Opening opening = commit::cheat_epr_open(c.record, desired, rng);
                if (commit::verify(c.holding, opening, rng) == commit::VerifyResult::Accept) {
                    ++(desired == 0 ? report.accepts_bit0 : report.accepts_bit1);
                }
            }
        }
    }
    return report;
}

std::string commit_report_to_json(const CommitDemoReport& report) {
    ordered_json j;
    j["protocol"] = "commit-demo";
    j["cheat"] = report.spec.cheat;
    j["photons"] = report.spec.photons;
    j["trials"] = report.spec.trials;
    j["seed"] = report.spec.seed;
    if (report.spec.cheat == "epr") {
        j["accepts_bit0"] = report.accepts_bit0;
        j["accepts_bit1"] = report.accepts_bit1;
    } else {
        j["bit"] = report.spec.bit;
        j["accepts"] = report.accepts;
    }
    return j.dump();
}

} // namespace qkdlab::harness
