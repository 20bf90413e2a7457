#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkdlab/channel.hpp"
#include "qkdlab/party.hpp"
#include "qkdlab/qkd.hpp"

namespace qkdlab::harness {

// One fully specified run. Config files mirror these field names; CLI flags
// override file values. Seeding is always explicit, never wall-clock.
struct RunSpec {
    std::string protocol = "bb84"; // bb84 | b92 | epr
    qkd::ProtocolConfig config;
    channel::SourceConfig source = channel::SourceConfig::ideal();
    channel::ChannelConfig chan;
    channel::EveStrategy eve = channel::EveStrategy::none();
    std::uint64_t seed = 0;
    std::string out;            // output prefix; empty writes stats to stdout
    std::string format = "json"; // json | csv

    void validate() const;
};

std::string eve_to_string(const channel::EveStrategy& eve);
channel::EveStrategy eve_from_string(const std::string& name);

// Session statistics plus the parameters that produced them, flattened for
// output. Wall time is deliberately not part of the record so that repeated
// seeded runs byte-compare equal; the CLI reports timing on stderr.
struct StatsRecord {
    RunSpec spec;
    qkd::SessionStats stats;
};

std::string stats_csv_header();
std::string stats_to_csv_row(const StatsRecord& record);
std::string stats_to_json(const StatsRecord& record);

// Runs the selected protocol in-process and, when spec.out is set, writes
// <out>.stats.<ext>, <out>.alice.key and <out>.bob.key.
StatsRecord run(const RunSpec& spec);
qkd::SessionResult run_session(const RunSpec& spec);

// One child run per value, child seeds derived from (master seed, index),
// rows in input order.
std::vector<StatsRecord> sweep(const RunSpec& base, const std::string& parameter,
                               const std::vector<double>& values);

bool is_sweepable(const std::string& parameter);
RunSpec apply_parameter(RunSpec spec, const std::string& parameter, double value);

// JSON config file <-> RunSpec.
RunSpec load_spec_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

// Key file: lowercase hex, one line, trailing newline.
void write_key_file(const std::string& path, const qkd::KeyMaterial& key);

// Shortest round-trip decimal rendering shared by every emitter.
std::string format_double(double v);

struct CommitDemoSpec {
    std::string cheat = "none"; // none | classical | epr
    std::size_t photons = 20;
    std::size_t trials = 20;
    int bit = 0; // honest committed bit / classical starting bit
    std::uint64_t seed = 0;
};

struct CommitDemoReport {
    CommitDemoSpec spec;
    // Honest and classical modes fill accepts/trials; the EPR cheat reports
    // acceptance per desired bit.
    std::uint64_t accepts = 0;
    std::uint64_t accepts_bit0 = 0;
    std::uint64_t accepts_bit1 = 0;
};

CommitDemoReport commit_demo(const CommitDemoSpec& spec);
std::string commit_report_to_json(const CommitDemoReport& report);

} // namespace qkdlab::harness
