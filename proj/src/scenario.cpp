// SPDX-License-Identifier: Apache-2.0
#include "perimod/scenario.hpp"

#include "perimod/errors.hpp"
#include "perimod/util.hpp"

#include <fstream>
#include <sstream>

namespace perimod {

namespace {

std::vector<std::string> split_line(const std::string& line, int line_no) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        if (line[i] == '"') {
            std::string tok = "\"";
            ++i;
            while (i < line.size() && line[i] != '"') {
                if (line[i] == '\\' && i + 1 < line.size())
                    tok += line[++i];
                else
                    tok += line[i];
                ++i;
            }
            if (i >= line.size())
                throw SyntaxError("scenario line " + std::to_string(line_no) +
                                  ": unterminated string");
            ++i;
            out.push_back(std::move(tok));
        } else {
            std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
                ++i;
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

std::vector<std::uint8_t> parse_bytes(const std::string& tok, int line_no) {
    std::vector<std::uint8_t> out;
    if (!tok.empty() && tok[0] == '"') {
        for (std::size_t i = 1; i < tok.size(); ++i)
            out.push_back(static_cast<std::uint8_t>(tok[i]));
        return out;
    }
    if (tok.size() % 2 != 0)
        throw SyntaxError("scenario line " + std::to_string(line_no) +
                          ": hex byte string must have even length");
    for (std::size_t i = 0; i < tok.size(); i += 2) {
        auto v = parse_plain_int("0x" + tok.substr(i, 2));
        if (!v)
            throw SyntaxError("scenario line " + std::to_string(line_no) + ": bad hex byte '" +
                              tok.substr(i, 2) + "'");
        out.push_back(static_cast<std::uint8_t>(*v));
    }
    return out;
}

std::uint64_t parse_addr(const std::string& tok, const Machine& m, int line_no) {
    if (auto v = parse_plain_int(tok))
        return *v;
    auto dot = tok.find('.');
    if (dot != std::string::npos) {
        try {
            return m.reg_address(tok.substr(0, dot), tok.substr(dot + 1));
        } catch (const Error& e) {
            throw SyntaxError("scenario line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    throw SyntaxError("scenario line " + std::to_string(line_no) + ": bad address '" + tok + "'");
}

std::uint64_t parse_int(const std::string& tok, int line_no) {
    if (auto v = parse_plain_int(tok))
        return *v;
    throw SyntaxError("scenario line " + std::to_string(line_no) + ": bad integer '" + tok + "'");
}

} // namespace

Scenario Scenario::parse(std::string_view text, const Machine& machine) {
    Scenario sc;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv[0] == '#')
            continue;
        auto toks = split_line(line, line_no);
        auto want = [&](std::size_t n) {
            if (toks.size() != n + 1)
                throw SyntaxError("scenario line " + std::to_string(line_no) + ": '" + toks[0] +
                                  "' takes " + std::to_string(n) + " arguments");
        };
        ScenarioStep st;
        st.line_no = line_no;
        const std::string& op = toks[0];
        if (op == "write") {
            want(3);
            st.kind = ScenarioStep::Kind::Write;
            st.addr = parse_addr(toks[1], machine, line_no);
            st.size = static_cast<unsigned>(parse_int(toks[2], line_no));
            st.value = parse_int(toks[3], line_no);
        } else if (op == "read_expect") {
            want(3);
            st.kind = ScenarioStep::Kind::ReadExpect;
            st.addr = parse_addr(toks[1], machine, line_no);
            st.size = static_cast<unsigned>(parse_int(toks[2], line_no));
            st.value = parse_int(toks[3], line_no);
        } else if (op == "tick") {
            want(1);
            st.kind = ScenarioStep::Kind::Tick;
            st.value = parse_int(toks[1], line_no);
        } else if (op == "inject_rx" || op == "expect_tx") {
            want(2);
            st.kind = op == "inject_rx" ? ScenarioStep::Kind::InjectRx
                                        : ScenarioStep::Kind::ExpectTx;
            st.device = toks[1];
            st.bytes = parse_bytes(toks[2], line_no);
        } else if (op == "expect_irq") {
            want(2);
            st.kind = ScenarioStep::Kind::ExpectIrq;
            st.irq_line = static_cast<std::uint32_t>(parse_int(toks[1], line_no));
            st.level = static_cast<int>(parse_int(toks[2], line_no));
        } else if (op == "mem_write" || op == "mem_expect") {
            want(2);
            st.kind = op == "mem_write" ? ScenarioStep::Kind::MemWrite
                                        : ScenarioStep::Kind::MemExpect;
            st.addr = parse_addr(toks[1], machine, line_no);
            st.bytes = parse_bytes(toks[2], line_no);
        } else {
            throw SyntaxError("scenario line " + std::to_string(line_no) + ": unknown step '" +
                              op + "'");
        }
        sc.steps.push_back(std::move(st));
    }
    return sc;
}

Scenario Scenario::load(const std::string& path, const Machine& machine) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open scenario '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), machine);
}

namespace {

std::string bytes_repr(std::span<const std::uint8_t> bytes) {
    std::string out;
    char buf[4];
    for (std::uint8_t b : bytes) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        out += buf;
    }
    return out;
}

} // namespace

ScenarioOutcome run_scenario(Machine& machine, const Scenario& scenario) {
    ScenarioOutcome out;
    std::ostringstream trace;
    machine.set_trace_sink([&trace](const TraceEvent& ev) { trace << ev.format() << "\n"; });

    for (const ScenarioStep& st : scenario.steps) {
        try {
            switch (st.kind) {
            case ScenarioStep::Kind::Write:
                machine.mmio_write(st.addr, st.size, st.value);
                break;
            case ScenarioStep::Kind::ReadExpect: {
                std::uint64_t got = machine.mmio_read(st.addr, st.size);
                if (got != st.value) {
                    out.ok = false;
                    out.message = "expected " + to_hex(st.value) + ", read " + to_hex(got);
                }
                break;
            }
            case ScenarioStep::Kind::Tick:
                machine.tick(st.value);
                break;
            case ScenarioStep::Kind::InjectRx:
                machine.inject_rx(st.device,
                                  std::span<const std::uint8_t>(st.bytes.data(), st.bytes.size()));
                break;
            case ScenarioStep::Kind::ExpectTx: {
                auto got = machine.read_tx(st.device);
                if (got != st.bytes) {
                    out.ok = false;
                    out.message = "expected tx " + bytes_repr(st.bytes) + ", got " +
                                  bytes_repr(got);
                }
                break;
            }
            case ScenarioStep::Kind::ExpectIrq: {
                int got = machine.irq_level(st.irq_line);
                if (got != st.level) {
                    out.ok = false;
                    out.message = "expected irq " + std::to_string(st.irq_line) + " level " +
                                  std::to_string(st.level) + ", got " + std::to_string(got);
                }
                break;
            }
            case ScenarioStep::Kind::MemWrite:
                machine.mem_write(st.addr,
                                  std::span<const std::uint8_t>(st.bytes.data(), st.bytes.size()));
                break;
            case ScenarioStep::Kind::MemExpect: {
                auto got = machine.mem_read(st.addr, st.bytes.size());
                if (got != st.bytes) {
                    out.ok = false;
                    out.message = "expected mem " + bytes_repr(st.bytes) + ", got " +
                                  bytes_repr(got);
                }
                break;
            }
            }
        } catch (const BusFault& e) {
            out.ok = false;
            out.bus_fault = true;
            out.failed_step = st.line_no;
            out.message = e.what();
            break;
        }
        if (!out.ok) {
            out.failed_step = st.line_no;
            break;
        }
    }
    machine.set_trace_sink(nullptr);
    out.trace = trace.str();
    return out;
}

} // namespace perimod
