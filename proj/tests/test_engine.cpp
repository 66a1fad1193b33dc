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


#include <sstream>

#include <gtest/gtest.h>

#include "qfb/assembler.hpp"
#include "qfb/engine.hpp"

namespace qfb {
namespace {

/// Backend that records calls and reports scripted outcomes.
struct ScriptedBackend {
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<int> o) : outcomes(std::move(o)) {}

    std::vector<int> outcomes;
    std::size_t next = 0;
    std::vector<std::pair<std::int64_t, std::size_t>> drives;  // (analog start, samples)
    std::int64_t finished = -1;

    ReadoutSample readout(int, std::int64_t, std::int64_t) {
        int o = next < outcomes.size() ? outcomes[next] : 0;
        ++next;
        return {o, o ? IQPoint{-1, 0} : IQPoint{1, 0}};
    }
    void drive(int, std::int64_t t, std::span<const DriveAmplitude> s, const SegmentKey &) {
        drives.emplace_back(t, s.size());
    }
    void finish(std::int64_t t) { finished = t; }
};

const char *kFeedback =
    "measure mask=0x01 rep=2 delay=40 len=200\n"
    "board qubit=1 tagselect=1\n"
    "waveform pi rect=+y:180:40\n"
    "waveform wait zeros=40\n"
    "waveform listen zeros=1032\n"
    "r: play listen then branch g e\n"
    "g: play wait then jump d\n"
    "e: play pi then next\n"
    "d: halt\n";

TEST(Latency, BudgetAndLoopback) {
    LatencyModel lat;
    EXPECT_EQ(lat.tau_tot(), 140);
    auto r = loopback_timing_check(lat);
    EXPECT_TRUE(r.consistent());
    EXPECT_DOUBLE_EQ(r.loopback_ns, 96);
    EXPECT_DOUBLE_EQ(r.dac_sum_ns, 68);
    EXPECT_DOUBLE_EQ(r.adc_sum_ns, 16);
    EXPECT_DOUBLE_EQ(r.proc_ns, 32);
    EXPECT_DOUBLE_EQ(r.tag_ns, 24);
    lat.tau_dac_ns = 70;
    EXPECT_FALSE(loopback_timing_check(lat).consistent());
}

TEST(Engine, FeedbackRoundTimeline) {
    BoardEngine engine(assemble(kFeedback), {});
    ScriptedBackend be{{1, 0}};
    ShotResult shot = engine.run(be, true);
    const auto &tl = shot.timeline;
    ASSERT_EQ(shot.rounds.size(), 2u);
    EXPECT_EQ(shot.rounds[0].tag(0), 1);
    auto adc = tl.times(Stage::AdcIn);
    auto rx = tl.times(Stage::TagRx);
    auto dac = tl.times(Stage::DacOut, 1);
    EXPECT_EQ(adc[0], 960);
    EXPECT_EQ(rx[0], 1032);
    EXPECT_EQ(dac[1], 1100);  // conditional slot reaches the qubit
    EXPECT_EQ(dac[1] - adc[0], 140);
    // Only the pi pulse is driven; the wait and idle slots are empty.
    ASSERT_EQ(be.drives.size(), 1u);
    EXPECT_EQ(be.drives[0].first, 1100);
    EXPECT_EQ(be.drives[0].second, 40u);
    EXPECT_NO_THROW(tl.validate(24));
    EXPECT_EQ(tl.count(Stage::RoStart), 2u);
    // Second round starts once the first round's pulses have left the DAC.
    auto trig = tl.times(Stage::Trigger);
    EXPECT_EQ(trig[1], 1032 + 40 + 1 + 68);
    EXPECT_EQ(be.finished, shot.end_ns);
}

TEST(Engine, EventsOrderedAndCsvHeader) {
    BoardEngine engine(assemble(kFeedback), {});
    ScriptedBackend be{{0, 1}};
    auto tl = engine.run(be, true).timeline;
    for (std::size_t k = 1; k < tl.events().size(); ++k) {
        EXPECT_LE(tl.events()[k - 1].t_ns, tl.events()[k].t_ns);
    }
    std::ostringstream os;
    tl.write_csv(os);
    EXPECT_EQ(os.str().rfind("t_ns,board,stage,payload\n", 0), 0u);
    std::ostringstream js;
    tl.write_trace_json(js);
    EXPECT_NE(js.str().find("traceEvents"), std::string::npos);
}

TEST(Engine, ShotConservation) {
    BoardEngine engine(assemble(kFeedback), {});
    std::size_t ro = 0;
    for (int shot = 0; shot < 5; ++shot) {
        ScriptedBackend be{{shot % 2, 1}};
        ro += engine.run(be, true).timeline.count(Stage::RoStart);
    }
    EXPECT_EQ(ro, 2u * 5u);
}

TEST(Engine, BranchBeforeTagIsTimingViolation) {
    std::string text = kFeedback;
    text.replace(text.find("zeros=1032"), 10, "zeros=1000");
    BoardEngine engine(assemble(text), {});
    ScriptedBackend be{{0, 0}};
    try {
        engine.run(be);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::TimingViolation);
    }
}

TEST(Engine, BranchOnUnmeasuredChannel) {
    std::string text = kFeedback;
    text.replace(text.find("tagselect=1"), 11, "tagselect=2");
    BoardEngine engine(assemble(text), {});
    ScriptedBackend be;
    EXPECT_THROW(engine.run(be), Error);
}

TEST(Engine, NextPastEndFaults) {
    BoardEngine engine(assemble("measure mask=0\nboard qubit=1 tagselect=1\nplay idle then next\n"), {});
    ScriptedBackend be;
    try {
        engine.run(be);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::ExecutionFault);
    }
}

TEST(Engine, InfiniteLoopHitsStepLimit) {
    BoardEngine engine(assemble("measure mask=0\nboard qubit=1 tagselect=1\na: play idle then jump a\n"), {});
    ScriptedBackend be;
    EXPECT_THROW(engine.run(be), Error);
}

TEST(Engine, TagPacketPerRound) {
    BoardEngine engine(assemble("measure mask=0x05 rep=1 delay=40 len=200\n"), {});
    ScriptedBackend be{{0, 1}};
    auto shot = engine.run(be);
    EXPECT_EQ(shot.rounds[0].tags, 0xFE);
    EXPECT_EQ(deserialize_tag_packet(shot.rounds[0].packet), 0xFE);
}

TEST(ExecuteControl, FollowsTags) {
    Program p = assemble(kFeedback);
    std::vector<int> tags = {1};
    auto trace = execute_control(p.boards[0], tags);
    EXPECT_EQ(trace.executed, (std::vector<std::size_t>{0, 2, 3}));
    ASSERT_EQ(trace.gates.size(), 1u);
    EXPECT_EQ(trace.gates[0].instruction, 2u);
    tags = {0};
    EXPECT_EQ(execute_control(p.boards[0], tags).executed, (std::vector<std::size_t>{0, 1, 3}));
    EXPECT_THROW(execute_control(p.boards[0], {}), Error);
}

TEST(MeasurePipeline, DemodulatesAndPacks) {
    std::array<double, kChannels> thr{};
    std::vector<DemodConfig> cfgs(2);
    std::vector<SampleWindow> w = {synthesize_window({0.8, 0}, cfgs[0]), synthesize_window({-0.8, 0}, cfgs[1])};
    auto r = measure_board_pipeline(w, cfgs, thr, 0x03);
    EXPECT_EQ(r.tags, 0xFE);
    EXPECT_EQ(r.packet, serialize_tag_packet(0xFE));
    EXPECT_THROW(measure_board_pipeline(w, cfgs, thr, 0x07), Error);
}

}  // namespace
}  // namespace qfb
