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


#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "qfb/assembler.hpp"

#ifndef QFB_SAMPLES_DIR
#error "QFB_SAMPLES_DIR must point at the samples directory"
#endif

namespace qfb {
namespace {

std::string assembly_error(const std::string &text) {
    try {
        assemble(text, "t.qasm");
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Assembly);
        return e.what();
    }
    ADD_FAILURE() << "assembled without error";
    return {};
}

TEST(Assembler, GoldenResetSample) {
    Program p = assemble_file(std::string(QFB_SAMPLES_DIR) + "/reset.qasm");
    ASSERT_EQ(p.measures.size(), 2u);
    ASSERT_EQ(p.boards.size(), 1u);
    const auto &b = p.boards[0];
    ASSERT_EQ(b.instructions.size(), 4u);
    std::ifstream golden(std::string(QFB_SAMPLES_DIR) + "/reset.words");
    ASSERT_TRUE(golden) << "missing golden file";
    std::vector<std::uint64_t> words;
    std::string w;
    while (golden >> w) {
        words.push_back(std::stoull(w, nullptr, 16));
    }
    ASSERT_EQ(words.size(), 6u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(encode_measure(p.measures[k]), words[k]);
    }
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(encode_control(b.instructions[k]), words[2 + k]) << k;
    }
    auto branch = decode_control(words[2]);
    EXPECT_EQ(branch.op(), Opcode::Branch);
    EXPECT_EQ(branch.index0, 1u);
    EXPECT_EQ(branch.index1, 2u);
    auto pi = b.memory.read(b.waveforms.at("pi"));
    EXPECT_EQ(pi.size(), 40u);
}

TEST(Assembler, RectWaveformIntegratesToAngle) {
    auto s = rect_waveform({Axis::MinusY, std::numbers::pi / 2, 40});
    ASSERT_EQ(s.size(), 40u);
    double sum = 0;
    for (auto a : s) {
        sum += a.y;
    }
    EXPECT_NEAR(sum, -std::numbers::pi / 2, 1e-12);
    EXPECT_THROW(rect_waveform({Axis::PlusY, 1, 2.5}), Error);
}

TEST(Assembler, LabelsPerBoardAndImplicitIdle) {
    Program p = assemble(
        "measure mask=0x03\n"
        "board qubit=1 tagselect=2\n"
        "waveform w zeros=8\n"
        "a: play w then jump a\n"
        "board qubit=2 tagselect=2\n"
        "a: halt\n");
    ASSERT_EQ(p.boards.size(), 2u);
    EXPECT_EQ(p.boards[0].tag_select, 1);
    EXPECT_EQ(p.boards[1].qubit, 1);
    EXPECT_EQ(p.boards[1].waveforms.at("idle").address0, 0u);
    EXPECT_EQ(p.measures[0].repetition, 1u);
}

TEST(Assembler, Diagnostics) {
    EXPECT_EQ(assembly_error("board qubit=1 tagselect=1\nplay idle then jump nowhere\n"),
              "t.qasm:2: unknown label 'nowhere'");
    EXPECT_NE(assembly_error("board qubit=1 tagselect=1\nplay idle then branch a b\na: halt\nb:\n")
                  .find("lies after the final instruction"),
              std::string::npos);
    EXPECT_NE(assembly_error("board qubit=1 tagselect=1\nx: halt\nx: halt\n").find("t.qasm:3: duplicate label 'x'"),
              std::string::npos);
    EXPECT_NE(assembly_error("measure mask=0x100\n").find("t.qasm:1:"), std::string::npos);
    EXPECT_NE(assembly_error("measure mask=1 rep=16\n").find("out of range"), std::string::npos);
    EXPECT_NE(assembly_error("board qubit=1 tagselect=1\nplay nothing then halt\n").find("unknown waveform"),
              std::string::npos);
    EXPECT_NE(assembly_error("frobnicate\n").find("unknown directive"), std::string::npos);
    EXPECT_NE(assembly_error("board qubit=0 tagselect=1\n").find("numbered from 1"), std::string::npos);
    std::string many = "board qubit=1 tagselect=1\n";
    for (int k = 0; k < 257; ++k) {
        many += "halt\n";
    }
    EXPECT_NE(assembly_error(many).find("more than 256"), std::string::npos);
}

TEST(Assembler, CommentsAndBlankLines) {
    Program p = assemble("# header\n\n; note\nthreshold 2 -0.25  # trailing\nmeasure mask=0x02 rep=3 delay=40 len=200\n");
    EXPECT_DOUBLE_EQ(p.thresholds[1], -0.25);
    EXPECT_EQ(p.measures[0].delay, 40u);
}

TEST(Assembler, WaveformCsv) {
    auto dir = std::filesystem::temp_directory_path() / "qfb-asm-test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "w.csv");
        f << "x,y,z\n0,0.5,0\n0,0.5,0\n";
        std::ofstream s(dir / "p.qasm");
        s << "board qubit=1 tagselect=1\nwaveform w file=w.csv\nplay w then halt\n";
        std::ofstream bad(dir / "bad.csv");
        bad << "x,y,z\n0,zero,0\n";
    }
    Program p = assemble_file((dir / "p.qasm").string());
    EXPECT_EQ(p.boards[0].memory.read(p.boards[0].waveforms.at("w")).size(), 2u);
    EXPECT_THROW(load_waveform_csv((dir / "bad.csv").string()), Error);
    try {
        assemble_file((dir / "missing.qasm").string());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

}  // namespace
}  // namespace qfb
