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


// Board engine: latency constants, the event timeline, control-board
// execution and a trigger-synchronized multi-board executor.
//
// Round model (one round per measure-instruction repetition, starting at
// trigger time T):
//   ro_start = T, ro_end = T + tau_ro
//   adc_in   = T + 4 * (delay + len)       last demod sample reaches the ADC
//   demod_done = tag_tx = adc_in + tau_adc + tau_proc
//   tag_rx   = tag_tx + tau_tag            on every control board
// Control boards run from T; each instruction plays its waveform segment
// digitally from its start and reaches the qubit tau_dac later. The next
// trigger fires once the readout pulse, tag delivery and every analog output
// of the round are done.

#ifndef QFB_ENGINE_HPP
#define QFB_ENGINE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qfb/error.hpp"
#include "qfb/isa.hpp"
#include "qfb/readout.hpp"

namespace qfb {

struct LatencyModel {
    std::int64_t tau_adc_ns = 16;
    std::int64_t tau_proc_ns = 32;
    std::int64_t tau_tag_ns = 24;
    std::int64_t tau_dac_ns = 68;
    std::int64_t tau_ao_ns = 160;
    std::int64_t tau_ro_ns = 800;
    std::int64_t tau_gt_ns = 40;

    std::int64_t tau_tot() const { return tau_adc_ns + tau_proc_ns + tau_tag_ns + tau_dac_ns; }

    void validate() const {
        for (std::int64_t v : {tau_adc_ns, tau_proc_ns, tau_tag_ns, tau_dac_ns, tau_ao_ns, tau_ro_ns, tau_gt_ns}) {
            if (v < 0) {
                throw Error(ErrorKind::InvalidArgument, "latency constants must be non-negative");
            }
        }
    }
};

/// Published sub-budgets the electronics latencies decompose into.
struct LatencyBreakdown {
    double dac_chip_ns = 39;        // 35 pipeline + 4 FIFO cycles at 1 ns
    int dac_actuate_stages = 6;     // FPGA pipeline stages, 4 ns each
    double dac_board_ns = 5;
    double record_ns = 12;          // waveform record module, 3 cycles
    double adc_pipeline_ns = 8;
    double adc_output_ns = 2.7;
    double loopback_measured_ns = 96;
    int proc_stages = 8;
    double tag_wire_ns = 20;        // measured, plus one head cycle
    double clock_ns = 4;
};

struct LoopbackReport {
    double dac_actuate_ns = 0;
    double dac_sum_ns = 0;       // chip + actuate + board
    double adc_off_chip_ns = 0;  // loopback - dac - record - adc chip
    double adc_sum_ns = 0;       // adc chip + off-chip
    double loopback_ns = 0;      // tau_dac + record + tau_adc
    double proc_ns = 0;          // stages * clock
    double tag_ns = 0;           // wire + head cycle
    std::int64_t total_ns = 0;
    std::vector<std::string> violations;

    bool consistent() const { return violations.empty(); }
};

/// Recomputes the published decompositions and flags any constant that no
/// longer adds up.
inline LoopbackReport loopback_timing_check(const LatencyModel &lat, const LatencyBreakdown &b = {}) {
    lat.validate();
    LoopbackReport r;
    r.dac_actuate_ns = b.dac_actuate_stages * b.clock_ns;
    r.dac_sum_ns = b.dac_chip_ns + r.dac_actuate_ns + b.dac_board_ns;
    r.adc_off_chip_ns = b.loopback_measured_ns - static_cast<double>(lat.tau_dac_ns) - b.record_ns -
                        b.adc_pipeline_ns - b.adc_output_ns;
    r.adc_sum_ns = b.adc_pipeline_ns + b.adc_output_ns + r.adc_off_chip_ns;
    r.loopback_ns = static_cast<double>(lat.tau_dac_ns) + b.record_ns + static_cast<double>(lat.tau_adc_ns);
    r.proc_ns = b.proc_stages * b.clock_ns;
    r.tag_ns = b.tag_wire_ns + b.clock_ns;
    r.total_ns = lat.tau_tot();
    auto check = [&](double expect, std::int64_t actual, const std::string &what) {
        if (std::abs(expect - static_cast<double>(actual)) > 1e-9) {
            std::ostringstream os;
            os << what << " = " << actual << " ns but its decomposition gives " << expect << " ns";
            r.violations.push_back(os.str());
        }
    };
    check(r.dac_sum_ns, lat.tau_dac_ns, "tau_dac");
    check(r.adc_sum_ns, lat.tau_adc_ns, "tau_adc");
    check(r.proc_ns, lat.tau_proc_ns, "tau_proc");
    check(r.tag_ns, lat.tau_tag_ns, "tau_tag");
    if (std::abs(r.loopback_ns - b.loopback_measured_ns) > 1e-9) {
        std::ostringstream os;
        os << "loopback = " << r.loopback_ns << " ns differs from the measured " << b.loopback_measured_ns << " ns";
        r.violations.push_back(os.str());
    }
    return r;
}

enum class Stage { GateEnd, Trigger, RoStart, RoEnd, AdcIn, DemodDone, TagTx, TagRx, DacOut, GateStart };

inline std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::Trigger: return "trigger";
        case Stage::RoStart: return "ro_start";
        case Stage::RoEnd: return "ro_end";
        case Stage::AdcIn: return "adc_in";
        case Stage::DemodDone: return "demod_done";
        case Stage::TagTx: return "tag_tx";
        case Stage::TagRx: return "tag_rx";
        case Stage::DacOut: return "dac_out";
        case Stage::GateStart: return "gate_start";
        case Stage::GateEnd: return "gate_end";
    }
    return "?";
}

/// Board 0 is the measure board; control board k is board k + 1.
inline std::string board_name(int board) { return board == 0 ? "measure" : "control" + std::to_string(board - 1); }

struct Event {
    std::int64_t t_ns = 0;
    int board = 0;
    Stage stage = Stage::Trigger;
    std::string payload;
};

class EventTimeline {
   public:
    void add(std::int64_t t, int board, Stage stage, std::string payload = {}) {
        events_.push_back({t, board, stage, std::move(payload)});
    }

    /// Orders by time, then stage (so a gate ending at t precedes the next
    /// trigger at t), then board; stable otherwise.
    void finalize() {
        std::stable_sort(events_.begin(), events_.end(), [](const Event &a, const Event &b) {
            if (a.t_ns != b.t_ns) {
                return a.t_ns < b.t_ns;
            }
            if (a.stage != b.stage) {
                return a.stage < b.stage;
            }
            return a.board < b.board;
        });
    }

    const std::vector<Event> &events() const { return events_; }
    std::size_t count(Stage s) const {
        return static_cast<std::size_t>(
            std::count_if(events_.begin(), events_.end(), [s](const Event &e) { return e.stage == s; }));
    }
    std::vector<std::int64_t> times(Stage s, std::optional<int> board = std::nullopt) const {
        std::vector<std::int64_t> out;
        for (const auto &e : events_) {
            if (e.stage == s && (!board || e.board == *board)) {
                out.push_back(e.t_ns);
            }
        }
        return out;
    }

    /// Non-decreasing times and a matching tag_tx for every tag_rx.
    void validate(std::int64_t tau_tag_ns) const {
        for (std::size_t k = 1; k < events_.size(); ++k) {
            if (events_[k].t_ns < events_[k - 1].t_ns) {
                throw Error(ErrorKind::InvariantViolation, "timeline is not time ordered");
            }
        }
        for (const auto &e : events_) {
            if (e.stage != Stage::TagRx) {
                continue;
            }
            bool found = std::any_of(events_.begin(), events_.end(), [&](const Event &tx) {
                return tx.stage == Stage::TagTx && tx.t_ns == e.t_ns - tau_tag_ns;
            });
            if (!found) {
                throw Error(ErrorKind::InvariantViolation,
                            "tag_rx at " + std::to_string(e.t_ns) + " ns has no tag_tx tau_tag earlier");
            }
        }
    }

    void write_csv(std::ostream &os) const {
        os << "t_ns,board,stage,payload\n";
        for (const auto &e : events_) {
            os << e.t_ns << ',' << board_name(e.board) << ',' << stage_name(e.stage) << ',' << e.payload << '\n';
        }
    }

    /// Trace-event JSON (instant events, timestamps in microseconds).
    void write_trace_json(std::ostream &os) const {
        os << "{\"displayTimeUnit\":\"ns\",\"traceEvents\":[";
        for (std::size_t k = 0; k < events_.size(); ++k) {
            const auto &e = events_[k];
            os << (k ? ",\n" : "\n") << "{\"name\":\"" << stage_name(e.stage) << "\",\"ph\":\"i\",\"s\":\"t\",\"ts\":"
               << e.t_ns / 1000 << '.' << std::setw(3) << std::setfill('0') << e.t_ns % 1000 << std::setfill(' ')
               << ",\"pid\":0,\"tid\":\"" << board_name(e.board) << "\",\"args\":{\"payload\":\"" << e.payload
               << "\"}}";
        }
        os << "\n]}\n";
    }

   private:
    std::vector<Event> events_;
};

// ---- standalone control execution -------------------------------------------

struct PlayedSegment {
    std::size_t instruction = 0;
    Segment segment;
};

struct ControlTrace {
    std::vector<std::size_t> executed;  // instruction indices in order
    std::vector<PlayedSegment> gates;   // segments with nonzero samples
    std::size_t tags_consumed = 0;
};

inline bool segment_is_zero(const ControlProgram &board, const Segment &seg) {
    auto s = board.memory.read(seg);
    return std::all_of(s.begin(), s.end(), [](const DriveAmplitude &a) { return a.is_zero(); });
}

/// Runs one board from instruction 0 to its first halt, consuming one tag per
/// opcode-3 instruction.
inline ControlTrace execute_control(const ControlProgram &board, std::span<const int> tag_stream,
                                    std::size_t max_steps = 4096) {
    ControlTrace trace;
    std::size_t pc = 0;
    const auto &code = board.instructions;
    for (std::size_t step = 0;; ++step) {
        if (step >= max_steps) {
            throw Error(ErrorKind::ExecutionFault, "step limit of " + std::to_string(max_steps) + " reached");
        }
        if (pc >= code.size()) {
            throw Error(ErrorKind::ExecutionFault, "program counter " + std::to_string(pc) + " out of range");
        }
        const auto &c = code[pc];
        trace.executed.push_back(pc);
        Segment seg{c.address0, c.address1};
        if (!segment_is_zero(board, seg)) {
            trace.gates.push_back({pc, seg});
        }
        switch (c.op()) {
            case Opcode::Halt: return trace;
            case Opcode::Next: pc = pc + 1; break;
            case Opcode::Jump: pc = c.index0; break;
            case Opcode::Branch:
                if (trace.tags_consumed >= tag_stream.size()) {
                    throw Error(ErrorKind::TimingViolation, "branch at instruction " + std::to_string(pc) +
                                                                " has no tag available");
                }
                pc = tag_stream[trace.tags_consumed++] == 0 ? c.index0 : c.index1;
                break;
        }
    }
}

// ---- measure board ----------------------------------------------------------

struct PipelineResult {
    TagPacket packet;
    std::uint8_t tags = 0xFF;
    std::array<IQPoint, kChannels> demod{};
};

/// Demodulates each enabled channel's window, discriminates it against its
/// threshold and packs the tags; disabled channels report 1.
inline PipelineResult measure_board_pipeline(std::span<const SampleWindow> windows,
                                             std::span<const DemodConfig> configs,
                                             const std::array<double, kChannels> &thresholds,
                                             std::uint8_t enabled_mask) {
    PipelineResult out;
    for (int ch = 0; ch < kChannels; ++ch) {
        if (!(enabled_mask >> ch & 1)) {
            continue;
        }
        if (static_cast<std::size_t>(ch) >= windows.size() || static_cast<std::size_t>(ch) >= configs.size()) {
            throw Error(ErrorKind::InvalidArgument, "no sample window for enabled channel " + std::to_string(ch + 1));
        }
        out.demod[ch] = demodulate(windows[ch].i, windows[ch].q, configs[ch]);
        if (discriminate(out.demod[ch], thresholds[ch]) == 0) {
            out.tags &= static_cast<std::uint8_t>(~(1u << ch));
        }
    }
    out.packet = serialize_tag_packet(out.tags, enabled_mask);
    return out;
}

// ---- round engine -----------------------------------------------------------

/// What a backend reports for one channel readout.
struct ReadoutSample {
    int outcome = 0;
    IQPoint iq;
};

/// Identifies a played waveform so backends can cache its propagator.
struct SegmentKey {
    int board = 0;
    std::uint32_t address0 = 0;
    std::uint32_t address1 = 0;
};

// A backend provides:
//   ReadoutSample readout(int channel, std::int64_t t_start, std::int64_t t_end);
//   void drive(int qubit, std::int64_t t_start, std::span<const DriveAmplitude>, const SegmentKey &);
//   void finish(std::int64_t t);
// Calls arrive in non-decreasing time per qubit.

struct ChannelReadout {
    int channel = 0;
    int outcome = 0;
    int tag = 1;
    IQPoint iq;
};

struct RoundRecord {
    std::int64_t trigger_ns = 0;
    std::uint32_t mask = 0;
    std::uint8_t tags = 0xFF;
    TagPacket packet;
    std::vector<ChannelReadout> readouts;

    int tag(int channel) const { return tags >> channel & 1; }
};

struct ShotResult {
    std::vector<RoundRecord> rounds;
    EventTimeline timeline;
    std::int64_t end_ns = 0;
};

struct EngineOptions {
    LatencyModel latency;
    std::size_t max_steps_per_round = 1024;
    bool record_timeline = false;
};

/// Listen time from trigger until the tag reaches the control boards.
inline std::int64_t tag_arrival_offset(const LatencyModel &lat, std::uint32_t delay_cycles,
                                       std::uint32_t length_cycles) {
    return 4 * static_cast<std::int64_t>(delay_cycles + length_cycles) + lat.tau_adc_ns + lat.tau_proc_ns +
           lat.tau_tag_ns;
}

class BoardEngine {
   public:
    BoardEngine(Program program, EngineOptions options) : program_(std::move(program)), opt_(options) {
        program_.validate();
        opt_.latency.validate();
        for (const auto &board : program_.boards) {
            std::vector<char> zero;
            for (const auto &c : board.instructions) {
                zero.push_back(segment_is_zero(board, {c.address0, c.address1}) ? 1 : 0);
            }
            zero_.push_back(std::move(zero));
        }
    }

    const Program &program() const { return program_; }
    const EngineOptions &options() const { return opt_; }

    template <class Backend>
    ShotResult run(Backend &backend, bool record_timeline = false) const {
        const LatencyModel &lat = opt_.latency;
        ShotResult shot;
        EventTimeline *tl = (opt_.record_timeline || record_timeline) ? &shot.timeline : nullptr;
        std::vector<std::size_t> pcs(program_.boards.size(), 0);
        std::int64_t t = 0;
        for (const auto &m : program_.measures) {
            for (std::uint32_t rep = 0; rep < m.repetition; ++rep) {
                RoundRecord round;
                round.trigger_ns = t;
                round.mask = m.channel_mask;
                if (tl) {
                    tl->add(t, 0, Stage::Trigger, "round=" + std::to_string(shot.rounds.size()));
                }
                std::int64_t next = t;
                std::optional<std::int64_t> tag_rx;
                std::uint8_t tags = 0xFF;
                if (m.channel_mask != 0) {
                    std::int64_t ro_end = t + lat.tau_ro_ns;
                    for (int ch = 0; ch < kChannels; ++ch) {
                        if (!(m.channel_mask >> ch & 1)) {
                            continue;
                        }
                        ReadoutSample rs = backend.readout(ch, t, ro_end);
                        ChannelReadout cr{ch, rs.outcome, discriminate(rs.iq, program_.thresholds[ch]), rs.iq};
                        if (cr.tag == 0) {
                            tags &= static_cast<std::uint8_t>(~(1u << ch));
                        }
                        round.readouts.push_back(cr);
                        if (tl) {
                            tl->add(t, 0, Stage::RoStart, "ch=" + std::to_string(ch + 1));
                            tl->add(ro_end, 0, Stage::RoEnd, "ch=" + std::to_string(ch + 1));
                        }
                    }
                    std::int64_t adc_in = t + 4 * static_cast<std::int64_t>(m.delay + m.length);
                    std::int64_t tx = adc_in + lat.tau_adc_ns + lat.tau_proc_ns;
                    tag_rx = tx + lat.tau_tag_ns;
                    round.packet = serialize_tag_packet(tags, static_cast<std::uint8_t>(m.channel_mask));
                    if (tl) {
                        tl->add(adc_in, 0, Stage::AdcIn);
                        tl->add(tx, 0, Stage::DemodDone);
                        tl->add(tx, 0, Stage::TagTx, "A=" + hex_word(round.packet.lane_a, 2) +
                                                         " B=" + hex_word(round.packet.lane_b, 2));
                        for (std::size_t b = 0; b < program_.boards.size(); ++b) {
                            tl->add(*tag_rx, static_cast<int>(b) + 1, Stage::TagRx);
                        }
                    }
                    next = std::max({next, ro_end, *tag_rx});
                }
                round.tags = tags;
                for (std::size_t b = 0; b < program_.boards.size(); ++b) {
                    next = std::max(next, run_board(backend, b, pcs[b], t, tags, m.channel_mask, tag_rx, tl));
                }
                shot.rounds.push_back(std::move(round));
                t = next;
            }
        }
        backend.finish(t);
        shot.end_ns = t;
        if (tl) {
            tl->finalize();
        }
        return shot;
    }

   private:
    /// Executes board `b` for one round; returns the end of its analog output.
    template <class Backend>
    std::int64_t run_board(Backend &backend, std::size_t b, std::size_t &pc, std::int64_t t0, std::uint8_t tags,
                           std::uint32_t mask, std::optional<std::int64_t> tag_rx, EventTimeline *tl) const {
        const ControlProgram &board = program_.boards[b];
        const auto &code = board.instructions;
        const std::int64_t dac = opt_.latency.tau_dac_ns;
        const int id = static_cast<int>(b) + 1;
        if (code.empty()) {
            return t0;
        }
        std::int64_t t = t0;
        for (std::size_t step = 0;; ++step) {
            if (step >= opt_.max_steps_per_round) {
                throw Error(ErrorKind::ExecutionFault, board_name(id) + ": step limit reached within one round");
            }
            if (pc >= code.size()) {
                throw Error(ErrorKind::ExecutionFault,
                            board_name(id) + ": program counter " + std::to_string(pc) + " out of range");
            }
            const ControlInstruction &c = code[pc];
            std::int64_t len = c.samples();
            std::int64_t analog = t + dac;
            if (tl) {
                tl->add(analog, id, Stage::DacOut, "pc=" + std::to_string(pc));
            }
            if (!zero_[b][pc]) {
                if (tl) {
                    std::string name = board.waveform_name({c.address0, c.address1});
                    tl->add(analog, id, Stage::GateStart, name);
                    tl->add(analog + len, id, Stage::GateEnd, name);
                }
                backend.drive(board.qubit, analog, board.memory.read({c.address0, c.address1}),
                              SegmentKey{static_cast<int>(b), c.address0, c.address1});
            }
            std::int64_t end = t + len;
            switch (c.op()) {
                case Opcode::Halt:
                    pc = pc + 1 == code.size() ? 0 : pc + 1;
                    return end + dac;
                case Opcode::Next:
                    pc = pc + 1;
                    break;
                case Opcode::Jump:
                    pc = c.index0;
                    break;
                case Opcode::Branch: {
                    int ch = board.tag_select;
                    if (!(mask >> ch & 1) || !tag_rx) {
                        throw Error(ErrorKind::TimingViolation, board_name(id) + ": branch at instruction " +
                                                                    std::to_string(pc) + " but channel " +
                                                                    std::to_string(ch + 1) + " was not measured");
                    }
                    if (*tag_rx > end) {
                        throw Error(ErrorKind::TimingViolation,
                                    board_name(id) + ": tag arrives at " + std::to_string(*tag_rx - t0) +
                                        " ns after trigger but instruction " + std::to_string(pc) + " ends at " +
                                        std::to_string(end - t0) + " ns");
                    }
                    pc = (tags >> ch & 1) == 0 ? c.index0 : c.index1;
                    break;
                }
            }
            t = end;
        }
    }

    Program program_;
    EngineOptions opt_;
    std::vector<std::vector<char>> zero_;
};

}  // namespace qfb

#endif  // QFB_ENGINE_HPP
