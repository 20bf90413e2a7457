#include "qkdlab/wire.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <utility>

namespace qkdlab::wire {

using ordered_json = nlohmann::ordered_json;

WireMessage WireMessage::hello(std::string proto, std::uint64_t n) {
    WireMessage m;
    m.t = Type::Hello;
    m.proto = std::move(proto);
    m.n = n;
    return m;
}

WireMessage WireMessage::pulse(std::uint64_t id, std::vector<qsim::PureState> photons) {
    WireMessage m;
    m.t = Type::Pulse;
    m.id = id;
    m.photons = std::move(photons);
    return m;
}

WireMessage WireMessage::bases(std::vector<std::uint8_t> v) {
    WireMessage m;
    m.t = Type::Bases;
    m.bits = std::move(v);
    return m;
}

WireMessage WireMessage::sift(std::vector<std::uint64_t> keep) {
    WireMessage m;
    m.t = Type::Sift;
    m.ids = std::move(keep);
    return m;
}

WireMessage WireMessage::sample(std::vector<std::uint64_t> idx) {
    WireMessage m;
    m.t = Type::Sample;
    m.ids = std::move(idx);
    return m;
}

WireMessage WireMessage::sample_v(std::vector<std::uint8_t> bits) {
    WireMessage m;
    m.t = Type::SampleV;
    m.bits = std::move(bits);
    return m;
}

WireMessage WireMessage::qber_msg(double v, bool abort) {
    WireMessage m;
    m.t = Type::Qber;
    m.qber = v;
    m.abort_flag = abort;
    return m;
}

WireMessage WireMessage::parity_msg(int pass, std::uint64_t lo, std::uint64_t hi, int v) {
    WireMessage m;
    m.t = Type::Parity;
    m.pass = pass;
    m.lo = lo;
    m.hi = hi;
    m.parity = v;
    return m;
}

WireMessage WireMessage::fp_msg(std::uint64_t v) {
    WireMessage m;
    m.t = Type::Fp;
    m.fp = v;
    return m;
}

WireMessage WireMessage::pa(std::uint64_t seed, std::uint64_t len) {
    WireMessage m;
    m.t = Type::Pa;
    m.pa_seed = seed;
    m.pa_len = len;
    return m;
}

WireMessage WireMessage::done() {
    WireMessage m;
    m.t = Type::Done;
    return m;
}

const char* type_name(WireMessage::Type t) {
    switch (t) {
        case WireMessage::Type::Hello: return "hello";
        case WireMessage::Type::Pulse: return "pulse";
        case WireMessage::Type::Bases: return "bases";
        case WireMessage::Type::Sift: return "sift";
        case WireMessage::Type::Sample: return "sample";
        case WireMessage::Type::SampleV: return "sample_v";
        case WireMessage::Type::Qber: return "qber";
        case WireMessage::Type::Parity: return "parity";
        case WireMessage::Type::Fp: return "fp";
        case WireMessage::Type::Pa: return "pa";
        case WireMessage::Type::Done: return "done";
    }
    return "?";
}

namespace {

std::string fp_to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::uint64_t hex_to_fp(const std::string& s) {
    if (s.size() != 16) throw ProtocolViolation("fp value must be 16 hex digits");
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else throw ProtocolViolation("fp value must be lowercase hex");
    }
    return v;
}

} // namespace

std::string serialize(const WireMessage& msg) {
    ordered_json j;
    j["t"] = type_name(msg.t);
    switch (msg.t) {
        case WireMessage::Type::Hello:
            j["proto"] = msg.proto;
            j["n"] = msg.n;
            break;
        case WireMessage::Type::Pulse: {
            j["id"] = msg.id;
            ordered_json ph = ordered_json::array();
            for (const auto& p : msg.photons) {
                ph.push_back({{p.a_h.real(), p.a_h.imag()}, {p.a_v.real(), p.a_v.imag()}});
            }
            j["ph"] = std::move(ph);
            break;
        }
        case WireMessage::Type::Bases:
            j["v"] = msg.bits;
            break;
        case WireMessage::Type::Sift:
            j["keep"] = msg.ids;
            break;
        case WireMessage::Type::Sample:
            j["idx"] = msg.ids;
            break;
        case WireMessage::Type::SampleV:
            j["bits"] = msg.bits;
            break;
        case WireMessage::Type::Qber:
            j["v"] = msg.qber;
            j["abort"] = msg.abort_flag;
            break;
        case WireMessage::Type::Parity:
            j["pass"] = msg.pass;
            j["lo"] = msg.lo;
            j["hi"] = msg.hi;
            j["v"] = msg.parity;
            break;
        case WireMessage::Type::Fp:
            j["v"] = fp_to_hex(msg.fp);
            break;
        case WireMessage::Type::Pa:
            j["seed"] = msg.pa_seed;
            j["len"] = msg.pa_len;
            break;
        case WireMessage::Type::Done:
            break;
    }
    return j.dump();
}

WireMessage parse(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolViolation(std::string("bad message json: ") + e.what());
    }
    try {
        if (!j.is_object()) throw ProtocolViolation("message is not an object");
        const std::string t = j.at("t").get<std::string>();
        WireMessage m;
        if (t == "hello") {
            m.t = WireMessage::Type::Hello;
            m.proto = j.at("proto").get<std::string>();
            m.n = j.at("n").get<std::uint64_t>();
        } else if (t == "pulse") {
            m.t = WireMessage::Type::Pulse;
            m.id = j.at("id").get<std::uint64_t>();
            for (const auto& p : j.at("ph")) {
                if (!p.is_array() || p.size() != 2 || p[0].size() != 2 || p[1].size() != 2) {
                    throw ProtocolViolation("bad photon amplitudes");
                }
                qsim::PureState st;
                st.a_h = {p[0][0].get<double>(), p[0][1].get<double>()};
                st.a_v = {p[1][0].get<double>(), p[1][1].get<double>()};
                m.photons.push_back(st);
            }
        } else if (t == "bases") {
            m.t = WireMessage::Type::Bases;
            for (const auto& b : j.at("v")) {
                const int v = b.get<int>();
                if (v != 0 && v != 1) throw ProtocolViolation("basis entries must be 0 or 1");
                m.bits.push_back(static_cast<std::uint8_t>(v));
            }
        } else if (t == "sift") {
            m.t = WireMessage::Type::Sift;
            m.ids = j.at("keep").get<std::vector<std::uint64_t>>();
        } else if (t == "sample") {
            m.t = WireMessage::Type::Sample;
            m.ids = j.at("idx").get<std::vector<std::uint64_t>>();
        } else if (t == "sample_v") {
            m.t = WireMessage::Type::SampleV;
            for (const auto& b : j.at("bits")) {
                const int v = b.get<int>();
                if (v != 0 && v != 1) throw ProtocolViolation("bit entries must be 0 or 1");
                m.bits.push_back(static_cast<std::uint8_t>(v));
            }
        } else if (t == "qber") {
            m.t = WireMessage::Type::Qber;
            m.qber = j.at("v").get<double>();
            m.abort_flag = j.at("abort").get<bool>();
        } else if (t == "parity") {
            m.t = WireMessage::Type::Parity;
            m.pass = j.at("pass").get<int>();
            m.lo = j.at("lo").get<std::uint64_t>();
            m.hi = j.at("hi").get<std::uint64_t>();
            m.parity = j.at("v").get<int>();
            if (m.parity != 0 && m.parity != 1) throw ProtocolViolation("parity must be 0 or 1");
        } else if (t == "fp") {
            m.t = WireMessage::Type::Fp;
            m.fp = hex_to_fp(j.at("v").get<std::string>());
        } else if (t == "pa") {
            m.t = WireMessage::Type::Pa;
            m.pa_seed = j.at("seed").get<std::uint64_t>();
            m.pa_len = j.at("len").get<std::uint64_t>();
        } else if (t == "done") {
            m.t = WireMessage::Type::Done;
        } else {
            throw ProtocolViolation("unknown message type: " + t);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolViolation(std::string("malformed message: ") + e.what());
    }
}

void InMemoryDuplex::Queue::push(WireMessage msg) {
    {
        std::lock_guard<std::mutex> lock(m);
        items.push_back(std::move(msg));
    }
    cv.notify_one();
}

WireMessage InMemoryDuplex::Queue::pop() {
    std::unique_lock<std::mutex> lock(m);
    cv.wait(lock, [this] { return !items.empty() || closed; });
    if (items.empty()) throw TransportError("peer closed the channel");
    WireMessage msg = std::move(items.front());
    items.pop_front();
    return msg;
}

void InMemoryDuplex::Queue::close() {
    {
        std::lock_guard<std::mutex> lock(m);
        closed = true;
    }
    cv.notify_all();
}

InMemoryDuplex::InMemoryDuplex(Interceptor interceptor) : interceptor_(std::move(interceptor)) {}

void InMemoryDuplex::End::send(const WireMessage& msg) {
    WireMessage out = msg;
    if (owner_->interceptor_) out = owner_->interceptor_(std::move(out), is_a_);
    (is_a_ ? owner_->a_to_b_ : owner_->b_to_a_).push(std::move(out));
}

WireMessage InMemoryDuplex::End::recv() {
    return (is_a_ ? owner_->b_to_a_ : owner_->a_to_b_).pop();
}

void InMemoryDuplex::End::close() {
    (is_a_ ? owner_->a_to_b_ : owner_->b_to_a_).close();
}

} // namespace qkdlab::wire
