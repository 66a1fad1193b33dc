// Copyright 2026 The qfb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Line-oriented assembly source to Program.
//
//   # comment (also ';')
//   threshold <channel> <value>
//   measure mask=<hex> rep=<n> delay=<cycles> len=<cycles>
//   board qubit=<channel> tagselect=<channel>
//   waveform <name> file=<csv> | zeros=<n> | rect=<axis>:<degrees>:<ns>
//   [label:] play <waveform> then next | halt | jump <label> | branch <label0> <label1>
//   [label:] halt
//
// Channels are numbered 1..8. Labels are local to the board they appear in.
// Each board starts with a one-sample zero waveform named `idle`.

#ifndef QFB_ASSEMBLER_HPP
#define QFB_ASSEMBLER_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qfb/error.hpp"
#include "qfb/isa.hpp"
#include "qfb/physics.hpp"

namespace qfb {

using WaveformLoader = std::function<std::vector<DriveAmplitude>(const std::string &path)>;

/// Reads samples as rows of `x,y,z` drive amplitudes in rad/ns; a leading
/// non-numeric row is treated as a header.
inline std::vector<DriveAmplitude> load_waveform_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open waveform file '" + path + "'");
    }
    std::vector<DriveAmplitude> out;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        double v[3] = {0, 0, 0};
        int k = 0;
        bool numeric = true;
        while (std::getline(ls, cell, ',') && k < 3) {
            try {
                std::size_t used = 0;
                v[k++] = std::stod(cell, &used);
            } catch (const std::exception &) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (out.empty() && row == 1) {
                continue;
            }
            throw Error(ErrorKind::Io, path + ":" + std::to_string(row) + ": non-numeric sample");
        }
        out.push_back({v[0], v[1], v[2]});
    }
    return out;
}

/// Samples of a rectangular pulse realizing `gate`.
inline std::vector<DriveAmplitude> rect_waveform(const PulseGate &gate) {
    if (gate.duration_ns < 1 || std::floor(gate.duration_ns) != gate.duration_ns) {
        throw Error(ErrorKind::InvalidArgument, "pulse duration must be a whole number of ns");
    }
    return std::vector<DriveAmplitude>(static_cast<std::size_t>(gate.duration_ns), rectangular_amplitude(gate));
}

namespace detail {

struct SourceLine {
    int number = 0;
    std::vector<std::string> tokens;
};

inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t k = 0;
    while (k < text.size()) {
        while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) {
            ++k;
        }
        std::size_t start = k;
        while (k < text.size() && !std::isspace(static_cast<unsigned char>(text[k]))) {
            ++k;
        }
        if (k > start) {
            out.emplace_back(text.substr(start, k - start));
        }
    }
    return out;
}

class AssemblerState {
   public:
    AssemblerState(std::string source, WaveformLoader loader) : source_(std::move(source)), loader_(std::move(loader)) {}

    [[noreturn]] void fail(int line, const std::string &msg) const {
        throw Error(ErrorKind::Assembly, source_ + ":" + std::to_string(line) + ": " + msg);
    }

    std::uint64_t parse_uint(int line, const std::string &text, std::uint64_t max, const std::string &what) const {
        std::uint64_t v = 0;
        std::string_view s = text;
        int base = 10;
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
            s.remove_prefix(2);
            base = 16;
        }
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
        if (ec == std::errc::result_out_of_range) {
            fail(line, what + " value '" + text + "' out of range");
        }
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(line, "expected an integer for " + what + ", got '" + text + "'");
        }
        if (v > max) {
            fail(line, what + " value " + text + " out of range (max " + std::to_string(max) + ")");
        }
        return v;
    }

    double parse_double(int line, const std::string &text, const std::string &what) const {
        try {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used != text.size() || !std::isfinite(v)) {
                throw std::invalid_argument(text);
            }
            return v;
        } catch (const std::exception &) {
            fail(line, "expected a number for " + what + ", got '" + text + "'");
        }
    }

    std::map<std::string, std::string> key_values(const SourceLine &l, std::size_t first) const {
        std::map<std::string, std::string> kv;
        for (std::size_t k = first; k < l.tokens.size(); ++k) {
            auto eq = l.tokens[k].find('=');
            if (eq == std::string::npos || eq == 0) {
                fail(l.number, "expected key=value, got '" + l.tokens[k] + "'");
            }
            std::string key = l.tokens[k].substr(0, eq);
            if (!kv.emplace(key, l.tokens[k].substr(eq + 1)).second) {
                fail(l.number, "duplicate key '" + key + "'");
            }
        }
        return kv;
    }

    int parse_channel(int line, const std::string &text) const {
        return static_cast<int>(parse_uint(line, text, kChannels, "channel")) - 1;
    }

    struct PendingControl {
        int line = 0;
        std::uint32_t opcode = 0;
        std::string label0, label1;
        Segment segment;
    };

    struct BoardBuild {
        ControlProgram program;
        std::map<std::string, std::pair<std::size_t, int>> labels;  // index, defining line
        std::vector<PendingControl> pending;
        bool touched = false;
    };

    void new_board(int qubit, int tag_select) {
        BoardBuild b;
        b.program.qubit = qubit;
        b.program.tag_select = tag_select;
        std::vector<DriveAmplitude> idle(1);
        b.program.waveforms["idle"] = b.program.memory.allocate(idle);
        boards_.push_back(std::move(b));
    }

    BoardBuild &current_board() {
        if (boards_.empty()) {
            new_board(0, 0);
        }
        boards_.back().touched = true;
        return boards_.back();
    }

    void handle(const SourceLine &l) {
        const std::string &op = l.tokens[0];
        if (op == "threshold") {
            if (l.tokens.size() != 3) {
                fail(l.number, "usage: threshold <channel> <value>");
            }
            program_.thresholds[parse_channel(l.number, l.tokens[1])] = parse_double(l.number, l.tokens[2], "threshold");
        } else if (op == "measure") {
            auto kv = key_values(l, 1);
            MeasureInstruction m;
            m.repetition = 1;
            for (const auto &[k, v] : kv) {
                if (k == "mask") {
                    m.channel_mask = static_cast<std::uint32_t>(parse_uint(l.number, v, 0xFF, "mask"));
                } else if (k == "rep") {
                    m.repetition = static_cast<std::uint32_t>(parse_uint(l.number, v, 0xF, "rep"));
                } else if (k == "delay") {
                    m.delay = static_cast<std::uint32_t>(parse_uint(l.number, v, 0xFFFF, "delay"));
                } else if (k == "len") {
                    m.length = static_cast<std::uint32_t>(parse_uint(l.number, v, 0xFF, "len"));
                } else {
                    fail(l.number, "unknown measure field '" + k + "'");
                }
            }
            if (!kv.count("mask")) {
                fail(l.number, "measure needs mask=");
            }
            program_.measures.push_back(m);
        } else if (op == "board") {
            auto kv = key_values(l, 1);
            int qubit = 0;
            int tag_select = 0;
            for (const auto &[k, v] : kv) {
                if (k == "qubit") {
                    qubit = parse_channel(l.number, v);
                } else if (k == "tagselect") {
                    tag_select = parse_channel(l.number, v);
                } else {
                    fail(l.number, "unknown board field '" + k + "'");
                }
            }
            if (qubit < 0 || tag_select < 0) {
                fail(l.number, "channels are numbered from 1");
            }
            if (!boards_.empty() && !boards_.back().touched) {
                boards_.pop_back();
            }
            if (boards_.size() == static_cast<std::size_t>(kChannels)) {
                fail(l.number, "too many control boards");
            }
            new_board(qubit, tag_select);
        } else if (op == "tagselect") {
            if (l.tokens.size() != 2) {
                fail(l.number, "usage: tagselect <channel>");
            }
            int ch = parse_channel(l.number, l.tokens[1]);
            if (ch < 0) {
                fail(l.number, "channels are numbered from 1");
            }
            current_board().program.tag_select = ch;
        } else if (op == "waveform") {
            waveform(l);
        } else if (op == "play" || op == "halt") {
            control(l);
        } else {
            fail(l.number, "unknown directive '" + op + "'");
        }
    }

    void waveform(const SourceLine &l) {
        if (l.tokens.size() != 3) {
            fail(l.number, "usage: waveform <name> file=<csv>|zeros=<n>|rect=<axis>:<deg>:<ns>");
        }
        const std::string &name = l.tokens[1];
        auto kv = key_values(l, 2);
        BoardBuild &b = current_board();
        if (b.program.waveforms.count(name)) {
            fail(l.number, "waveform '" + name + "' already defined");
        }
        std::vector<DriveAmplitude> samples;
        const auto &[key, value] = *kv.begin();
        if (key == "file") {
            if (!loader_) {
                fail(l.number, "no waveform loader for file '" + value + "'");
            }
            try {
                samples = loader_(value);
            } catch (const Error &e) {
                fail(l.number, e.what());
            }
        } else if (key == "zeros") {
            samples.resize(parse_uint(l.number, value, WaveformMemory::kCapacity, "zeros"));
        } else if (key == "rect") {
            auto c1 = value.find(':');
            auto c2 = value.find(':', c1 == std::string::npos ? c1 : c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos) {
                fail(l.number, "rect expects <axis>:<degrees>:<ns>");
            }
            PulseGate g;
            try {
                g.axis = parse_axis(value.substr(0, c1));
            } catch (const Error &e) {
                fail(l.number, e.what());
            }
            g.angle_rad = parse_double(l.number, value.substr(c1 + 1, c2 - c1 - 1), "angle") * std::numbers::pi / 180;
            g.duration_ns = static_cast<double>(
                parse_uint(l.number, value.substr(c2 + 1), WaveformMemory::kCapacity, "pulse length"));
            try {
                samples = rect_waveform(g);
            } catch (const Error &e) {
                fail(l.number, e.what());
            }
        } else {
            fail(l.number, "unknown waveform source '" + key + "'");
        }
        if (samples.empty()) {
            fail(l.number, "waveform '" + name + "' has no samples");
        }
        try {
            b.program.waveforms[name] = b.program.memory.allocate(samples);
        } catch (const Error &e) {
            fail(l.number, std::string("waveform '") + name + "': " + e.what());
        }
    }

    void control(const SourceLine &l) {
        BoardBuild &b = current_board();
        PendingControl pc;
        pc.line = l.number;
        std::string wf = "idle";
        std::size_t k = 1;
        if (l.tokens[0] == "halt") {
            if (l.tokens.size() != 1) {
                fail(l.number, "halt takes no operands");
            }
            pc.opcode = 0;
        } else {
            if (l.tokens.size() < 4 || l.tokens[2] != "then") {
                fail(l.number, "usage: play <waveform> then next|halt|jump <label>|branch <label0> <label1>");
            }
            wf = l.tokens[1];
            k = 3;
            const std::string &flow = l.tokens[k];
            std::size_t expect = 4;
            if (flow == "halt") {
                pc.opcode = 0;
            } else if (flow == "next") {
                pc.opcode = 1;
            } else if (flow == "jump") {
                pc.opcode = 2;
                expect = 5;
            } else if (flow == "branch") {
                pc.opcode = 3;
                expect = 6;
            } else {
                fail(l.number, "unknown flow '" + flow + "'");
            }
            if (l.tokens.size() != expect) {
                fail(l.number, "wrong operand count for '" + flow + "'");
            }
            if (pc.opcode >= 2) {
                pc.label0 = l.tokens[4];
            }
            if (pc.opcode == 3) {
                pc.label1 = l.tokens[5];
            }
        }
        auto it = b.program.waveforms.find(wf);
        if (it == b.program.waveforms.end()) {
            fail(l.number, "unknown waveform '" + wf + "'");
        }
        pc.segment = it->second;
        if (b.pending.size() == 256) {
            fail(l.number, "more than 256 control instructions on one board");
        }
        b.pending.push_back(pc);
    }

    void label(const std::string &name, int line) {
        BoardBuild &b = current_board();
        if (b.labels.count(name)) {
            fail(line, "duplicate label '" + name + "' (first defined on line " +
                           std::to_string(b.labels[name].second) + ")");
        }
        b.labels[name] = {b.pending.size(), line};
    }

    Program finish() {
        for (auto &b : boards_) {
            std::size_t n = b.pending.size();
            auto resolve = [&](const std::string &name, int line) -> std::uint32_t {
                auto it = b.labels.find(name);
                if (it == b.labels.end()) {
                    fail(line, "unknown label '" + name + "'");
                }
                if (it->second.first >= n) {
                    fail(line, "branch target '" + name + "' lies after the final instruction (defined on line " +
                                   std::to_string(it->second.second) + ")");
                }
                return static_cast<std::uint32_t>(it->second.first);
            };
            for (const auto &pc : b.pending) {
                ControlInstruction c;
                c.opcode = pc.opcode;
                c.address0 = pc.segment.address0;
                c.address1 = pc.segment.address1;
                if (pc.opcode >= 2) {
                    c.index0 = resolve(pc.label0, pc.line);
                }
                if (pc.opcode == 3) {
                    c.index1 = resolve(pc.label1, pc.line);
                }
                b.program.instructions.push_back(c);
            }
            program_.boards.push_back(std::move(b.program));
        }
        program_.validate();
        return std::move(program_);
    }

   private:
    std::string source_;
    WaveformLoader loader_;
    Program program_;
    std::vector<BoardBuild> boards_;
};

}  // namespace detail

/// Assembles `text`. `source_name` prefixes diagnostics ("name:line: msg").
inline Program assemble(std::string_view text, const std::string &source_name = "<input>",
                        WaveformLoader loader = load_waveform_csv) {
    detail::AssemblerState st(source_name, std::move(loader));
    std::istringstream in{std::string(text)};
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        auto cut = raw.find_first_of("#;");
        std::string_view body(raw.data(), cut == std::string::npos ? raw.size() : cut);
        detail::SourceLine line{number, detail::tokenize(body)};
        while (!line.tokens.empty() && line.tokens[0].size() > 1 && line.tokens[0].back() == ':') {
            st.label(line.tokens[0].substr(0, line.tokens[0].size() - 1), number);
            line.tokens.erase(line.tokens.begin());
        }
        if (!line.tokens.empty()) {
            st.handle(line);
        }
    }
    return st.finish();
}

/// Assembles a file; relative waveform paths resolve against its directory.
inline Program assemble_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    return assemble(ss.str(), path, [base](const std::string &file) {
        std::filesystem::path p(file);
        return load_waveform_csv((p.is_absolute() ? p : base / p).string());
    });
}

}  // namespace qfb

#endif  // QFB_ASSEMBLER_HPP
