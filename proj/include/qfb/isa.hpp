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


// Measure/control instruction words, the feedback tag packet, waveform memory
// and the QFBK1 program container.
//
// Measure word (36 bits, MSB first): mask[7:0] rep[3:0] delay[15:0] len[7:0]
// Control word (60 bits, MSB first): op[3:0] idx0[7:0] idx1[7:0] addr0[19:0] addr1[19:0]

#ifndef QFB_ISA_HPP
#define QFB_ISA_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qfb/error.hpp"
#include "qfb/physics.hpp"

namespace qfb {

inline constexpr int kChannels = 8;
inline constexpr std::uint64_t kMeasureBits = 36;
inline constexpr std::uint64_t kControlBits = 60;

struct MeasureInstruction {
    std::uint32_t channel_mask = 0;  // 8 bits, bit k enables channel k+1
    std::uint32_t repetition = 0;    // 4 bits
    std::uint32_t delay = 0;         // 16 bits, 4 ns cycles
    std::uint32_t length = 0;        // 8 bits, 4 ns cycles

    friend bool operator==(const MeasureInstruction &, const MeasureInstruction &) = default;
};

enum class Opcode : std::uint32_t { Halt = 0, Next = 1, Jump = 2, Branch = 3 };

struct ControlInstruction {
    std::uint32_t opcode = 0;
    std::uint32_t index0 = 0;
    std::uint32_t index1 = 0;
    std::uint32_t address0 = 0;
    std::uint32_t address1 = 0;

    Opcode op() const { return static_cast<Opcode>(opcode); }
    std::uint32_t samples() const { return address1 - address0 + 1; }
    friend bool operator==(const ControlInstruction &, const ControlInstruction &) = default;
};

namespace detail {
inline void check_field(std::uint64_t value, int bits, const char *name) {
    if (value >> bits) {
        throw Error(ErrorKind::Encoding, std::string(name) + " exceeds " + std::to_string(bits) + " bits");
    }
}
}  // namespace detail

inline std::uint64_t encode_measure(const MeasureInstruction &m) {
    detail::check_field(m.channel_mask, 8, "channel mask");
    detail::check_field(m.repetition, 4, "repetition");
    detail::check_field(m.delay, 16, "delay");
    detail::check_field(m.length, 8, "length");
    return std::uint64_t{m.channel_mask} << 28 | std::uint64_t{m.repetition} << 24 | std::uint64_t{m.delay} << 8 |
           std::uint64_t{m.length};
}

inline MeasureInstruction decode_measure(std::uint64_t word) {
    detail::check_field(word, kMeasureBits, "measure word");
    return {static_cast<std::uint32_t>(word >> 28 & 0xFF), static_cast<std::uint32_t>(word >> 24 & 0xF),
            static_cast<std::uint32_t>(word >> 8 & 0xFFFF), static_cast<std::uint32_t>(word & 0xFF)};
}

inline std::uint64_t encode_control(const ControlInstruction &c) {
    if (c.opcode > 3) {
        throw Error(ErrorKind::InvalidOpcode, "opcode " + std::to_string(c.opcode) + " is not defined");
    }
    detail::check_field(c.index0, 8, "index0");
    detail::check_field(c.index1, 8, "index1");
    detail::check_field(c.address0, 20, "address0");
    detail::check_field(c.address1, 20, "address1");
    if (c.address0 > c.address1) {
        throw Error(ErrorKind::Encoding, "address0 exceeds address1");
    }
    return std::uint64_t{c.opcode} << 56 | std::uint64_t{c.index0} << 48 | std::uint64_t{c.index1} << 40 |
           std::uint64_t{c.address0} << 20 | std::uint64_t{c.address1};
}

inline ControlInstruction decode_control(std::uint64_t word) {
    detail::check_field(word, kControlBits, "control word");
    ControlInstruction c{static_cast<std::uint32_t>(word >> 56 & 0xF), static_cast<std::uint32_t>(word >> 48 & 0xFF),
                         static_cast<std::uint32_t>(word >> 40 & 0xFF),
                         static_cast<std::uint32_t>(word >> 20 & 0xFFFFF), static_cast<std::uint32_t>(word & 0xFFFFF)};
    if (c.opcode > 3) {
        throw Error(ErrorKind::InvalidOpcode, "opcode " + std::to_string(c.opcode) + " is not defined");
    }
    if (c.address0 > c.address1) {
        throw Error(ErrorKind::Encoding, "decoded address0 exceeds address1");
    }
    return c;
}

/// Two 5-bit lanes sent over five cycles. Bit 4 is the first cycle (head);
/// lane A then carries channels 1,3,5,7 and lane B channels 2,4,6,8.
struct TagPacket {
    std::uint8_t lane_a = 0x1F;
    std::uint8_t lane_b = 0x1F;

    /// (lane A, lane B) bits of cycle 1..5.
    std::array<std::array<int, 2>, 5> cycles() const {
        std::array<std::array<int, 2>, 5> out{};
        for (int c = 0; c < 5; ++c) {
            out[c] = {lane_a >> (4 - c) & 1, lane_b >> (4 - c) & 1};
        }
        return out;
    }
    friend bool operator==(const TagPacket &, const TagPacket &) = default;
};

/// `tags` bit k is the tag of channel k+1; channels missing from
/// `enabled_mask` transmit the default 1.
inline TagPacket serialize_tag_packet(std::uint8_t tags, std::uint8_t enabled_mask = 0xFF) {
    std::uint8_t effective = tags | static_cast<std::uint8_t>(~enabled_mask);
    TagPacket p{0x10, 0x10};
    for (int slot = 0; slot < 4; ++slot) {
        p.lane_a |= static_cast<std::uint8_t>((effective >> (2 * slot) & 1) << (3 - slot));
        p.lane_b |= static_cast<std::uint8_t>((effective >> (2 * slot + 1) & 1) << (3 - slot));
    }
    return p;
}

inline std::uint8_t deserialize_tag_packet(const TagPacket &p) {
    if ((p.lane_a | p.lane_b) > 0x1F) {
        throw Error(ErrorKind::Framing, "tag lane wider than 5 bits");
    }
    if (!(p.lane_a & 0x10) || !(p.lane_b & 0x10)) {
        throw Error(ErrorKind::Framing, "tag packet without head bits");
    }
    std::uint8_t tags = 0;
    for (int slot = 0; slot < 4; ++slot) {
        tags |= static_cast<std::uint8_t>((p.lane_a >> (3 - slot) & 1) << (2 * slot));
        tags |= static_cast<std::uint8_t>((p.lane_b >> (3 - slot) & 1) << (2 * slot + 1));
    }
    return tags;
}

struct Segment {
    std::uint32_t address0 = 0;
    std::uint32_t address1 = 0;

    std::uint32_t size() const { return address1 - address0 + 1; }
    friend bool operator==(const Segment &, const Segment &) = default;
};

/// Per-board sample memory, one address per 1 ns sample. Allocation is
/// first-fit on 4-sample boundaries.
class WaveformMemory {
   public:
    static constexpr std::uint32_t kCapacity = 1u << 20;

    Segment allocate(std::span<const DriveAmplitude> samples) {
        if (samples.empty()) {
            throw Error(ErrorKind::InvalidArgument, "cannot allocate an empty waveform");
        }
        std::uint32_t n = static_cast<std::uint32_t>(samples.size());
        std::uint32_t start = 0;
        for (const auto &[a0, a1] : used_) {
            if (start + n <= a0) {
                break;
            }
            start = std::max(start, align(a1 + 1));
        }
        if (static_cast<std::uint64_t>(start) + n > kCapacity) {
            throw Error(ErrorKind::Encoding, "waveform memory exhausted");
        }
        Segment seg{start, start + n - 1};
        used_.emplace(seg.address0, seg.address1);
        if (samples_.size() < seg.address1 + 1u) {
            samples_.resize(seg.address1 + 1u);
        }
        std::copy(samples.begin(), samples.end(), samples_.begin() + start);
        return seg;
    }

    /// Places samples at a fixed address (used when loading a binary image).
    void store(std::uint32_t address, std::span<const DriveAmplitude> samples) {
        if (static_cast<std::uint64_t>(address) + samples.size() > kCapacity) {
            throw Error(ErrorKind::Encoding, "waveform store past memory capacity");
        }
        if (samples.empty()) {
            return;
        }
        std::uint32_t a1 = address + static_cast<std::uint32_t>(samples.size()) - 1;
        used_.emplace(address, a1);
        if (samples_.size() < a1 + 1u) {
            samples_.resize(a1 + 1u);
        }
        std::copy(samples.begin(), samples.end(), samples_.begin() + address);
    }

    std::span<const DriveAmplitude> read(const Segment &seg) const {
        if (seg.address0 > seg.address1 || seg.address1 >= kCapacity || seg.address1 >= samples_.size()) {
            throw Error(ErrorKind::ExecutionFault, "waveform read outside loaded memory [" +
                                                       std::to_string(seg.address0) + ", " +
                                                       std::to_string(seg.address1) + "]");
        }
        return std::span<const DriveAmplitude>(samples_).subspan(seg.address0, seg.size());
    }

    std::size_t size() const { return samples_.size(); }
    const std::vector<DriveAmplitude> &samples() const { return samples_; }

   private:
    static std::uint32_t align(std::uint32_t a) { return (a + 3u) & ~3u; }

    std::multimap<std::uint32_t, std::uint32_t> used_;
    std::vector<DriveAmplitude> samples_;
};

/// Instruction stream and registers of one control board.
struct ControlProgram {
    int qubit = 0;       // channel driven by this board, 0-based
    int tag_select = 0;  // channel whose tag steers opcode-3 branches, 0-based
    std::vector<ControlInstruction> instructions;
    WaveformMemory memory;
    std::map<std::string, Segment> waveforms;

    std::string waveform_name(const Segment &seg) const {
        for (const auto &[name, s] : waveforms) {
            if (s == seg) {
                return name;
            }
        }
        return {};
    }
};

struct Program {
    std::vector<MeasureInstruction> measures;
    std::array<double, kChannels> thresholds{};
    std::vector<ControlProgram> boards;

    void validate() const {
        for (const auto &m : measures) {
            encode_measure(m);
        }
        for (std::size_t b = 0; b < boards.size(); ++b) {
            const auto &board = boards[b];
            if (board.qubit < 0 || board.qubit >= kChannels || board.tag_select < 0 || board.tag_select >= kChannels) {
                throw Error(ErrorKind::InvalidArgument, "board " + std::to_string(b) + ": channel out of range");
            }
            std::size_t n = board.instructions.size();
            for (std::size_t k = 0; k < n; ++k) {
                const auto &c = board.instructions[k];
                encode_control(c);
                std::string where = "board " + std::to_string(b) + " instruction " + std::to_string(k);
                if ((c.op() == Opcode::Jump || c.op() == Opcode::Branch) && c.index0 >= n) {
                    throw Error(ErrorKind::InvalidArgument, where + ": target index0 out of range");
                }
                if (c.op() == Opcode::Branch && c.index1 >= n) {
                    throw Error(ErrorKind::InvalidArgument, where + ": target index1 out of range");
                }
                board.memory.read({c.address0, c.address1});
            }
        }
    }
};

// ---- binary container -------------------------------------------------------

namespace detail {

inline void put_u16(std::ostream &os, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    os.write(b, 2);
}
inline void put_u32(std::ostream &os, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
        os.put(static_cast<char>(v >> (8 * k) & 0xFF));
    }
}
inline void put_u64(std::ostream &os, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
        os.put(static_cast<char>(v >> (8 * k) & 0xFF));
    }
}
inline void put_f64(std::ostream &os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_le(std::istream &is, int bytes) {
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) {
        int c = is.get();
        if (c == std::char_traits<char>::eof()) {
            throw Error(ErrorKind::Io, "truncated program image");
        }
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * k);
    }
    return v;
}
inline double get_f64(std::istream &is) { return std::bit_cast<double>(get_le(is, 8)); }

}  // namespace detail

inline constexpr char kProgramMagic[5] = {'Q', 'F', 'B', 'K', '1'};

/// Writes the QFBK1 image. All integers little-endian; see README for layout.
inline void write_program(std::ostream &os, const Program &p) {
    p.validate();
    os.write(kProgramMagic, 5);
    detail::put_u32(os, static_cast<std::uint32_t>(p.measures.size()));
    for (const auto &m : p.measures) {
        detail::put_u64(os, encode_measure(m));
    }
    for (double t : p.thresholds) {
        detail::put_f64(os, t);
    }
    detail::put_u32(os, static_cast<std::uint32_t>(p.boards.size()));
    for (const auto &b : p.boards) {
        detail::put_u32(os, static_cast<std::uint32_t>(b.qubit));
        detail::put_u32(os, static_cast<std::uint32_t>(b.tag_select));
        detail::put_u32(os, static_cast<std::uint32_t>(b.instructions.size()));
        for (const auto &c : b.instructions) {
            detail::put_u64(os, encode_control(c));
        }
        detail::put_u32(os, static_cast<std::uint32_t>(b.waveforms.size()));
        for (const auto &[name, seg] : b.waveforms) {
            if (name.size() > 0xFFFF) {
                throw Error(ErrorKind::Encoding, "waveform name too long");
            }
            detail::put_u16(os, static_cast<std::uint16_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            detail::put_u32(os, seg.address0);
            detail::put_u32(os, seg.address1);
        }
        detail::put_u32(os, static_cast<std::uint32_t>(b.memory.size()));
        for (const auto &s : b.memory.samples()) {
            detail::put_f64(os, s.x);
            detail::put_f64(os, s.y);
            detail::put_f64(os, s.z);
        }
    }
}

inline Program read_program(std::istream &is) {
    char magic[5];
    if (!is.read(magic, 5) || std::memcmp(magic, kProgramMagic, 5) != 0) {
        throw Error(ErrorKind::Io, "not a QFBK1 program image");
    }
    Program p;
    auto count = [&](std::uint64_t limit, const char *what) {
        std::uint64_t n = detail::get_le(is, 4);
        if (n > limit) {
            throw Error(ErrorKind::Io, std::string("implausible ") + what + " count in program image");
        }
        return static_cast<std::size_t>(n);
    };
    std::size_t nm = count(1u << 16, "measure");
    for (std::size_t k = 0; k < nm; ++k) {
        p.measures.push_back(decode_measure(detail::get_le(is, 8)));
    }
    for (double &t : p.thresholds) {
        t = detail::get_f64(is);
    }
    std::size_t nb = count(kChannels, "board");
    for (std::size_t b = 0; b < nb; ++b) {
        ControlProgram board;
        board.qubit = static_cast<int>(detail::get_le(is, 4));
        board.tag_select = static_cast<int>(detail::get_le(is, 4));
        std::size_t nc = count(256, "control");
        for (std::size_t k = 0; k < nc; ++k) {
            board.instructions.push_back(decode_control(detail::get_le(is, 8)));
        }
        std::size_t nw = count(1u << 16, "waveform");
        for (std::size_t k = 0; k < nw; ++k) {
            std::string name(detail::get_le(is, 2), '\0');
            if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) {
                throw Error(ErrorKind::Io, "truncated waveform name");
            }
            Segment seg{static_cast<std::uint32_t>(detail::get_le(is, 4)),
                        static_cast<std::uint32_t>(detail::get_le(is, 4))};
            board.waveforms[name] = seg;
        }
        std::size_t ns = count(WaveformMemory::kCapacity, "sample");
        std::vector<DriveAmplitude> samples(ns);
        for (auto &s : samples) {
            s.x = detail::get_f64(is);
            s.y = detail::get_f64(is);
            s.z = detail::get_f64(is);
        }
        board.memory.store(0, samples);
        p.boards.push_back(std::move(board));
    }
    p.validate();
    return p;
}

// ---- listing ----------------------------------------------------------------

inline std::string hex_word(std::uint64_t w, int digits) {
    std::ostringstream os;
    os << "0x" << std::hex << std::uppercase << std::setw(digits) << std::setfill('0') << w;
    return os.str();
}

/// Human-readable listing with the encoded words.
inline void write_listing(std::ostream &os, const Program &p) {
    os << "# measure board\n";
    for (std::size_t k = 0; k < p.measures.size(); ++k) {
        const auto &m = p.measures[k];
        os << k << "  " << hex_word(encode_measure(m), 9) << "  measure mask=" << hex_word(m.channel_mask, 2)
           << " rep=" << m.repetition << " delay=" << m.delay << " len=" << m.length << '\n';
    }
    for (std::size_t b = 0; b < p.boards.size(); ++b) {
        const auto &board = p.boards[b];
        os << "# control board " << b << " qubit=" << board.qubit + 1 << " tagselect=" << board.tag_select + 1 << '\n';
        static constexpr const char *kOps[] = {"halt", "next", "jump", "branch"};
        for (std::size_t k = 0; k < board.instructions.size(); ++k) {
            const auto &c = board.instructions[k];
            std::string name = board.waveform_name({c.address0, c.address1});
            os << k << "  " << hex_word(encode_control(c), 15) << "  " << kOps[c.opcode] << " idx0=" << c.index0
               << " idx1=" << c.index1 << " [" << c.address0 << ", " << c.address1 << "]";
            if (!name.empty()) {
                os << " " << name;
            }
            os << '\n';
        }
    }
}

}  // namespace qfb

#endif  // QFB_ISA_HPP
