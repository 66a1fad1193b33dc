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


// qfbctl: run feedback experiments, assemble and disassemble programs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfb/qfb.hpp"

namespace {

using namespace qfb;

struct RunOptions {
    std::string experiment;
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> shots, steps, rounds;
    std::optional<unsigned> threads;
    bool ideal = false;
};

std::string single_line(std::string s) {
    for (char &c : s) {
        if (c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return s;
}

int report_error(std::string_view kind, const std::string &message) {
    std::cerr << "error kind=" << kind << " message=" << single_line(message) << '\n';
    return 2;
}

Json demo_isa(const ExperimentConfig &cfg, const fs::path &dir) {
    std::string text = reset_program(cfg);
    Program p = assemble(text, "reset.qasm");
    write_text(dir / "reset.qasm", text);
    {
        auto bin = open_output(dir / "program.qfbk", true);
        write_program(bin, p);
    }
    std::ifstream back(dir / "program.qfbk", std::ios::binary);
    Program q = read_program(back);
    bool round_trip = q.measures.size() == p.measures.size() && q.boards.size() == p.boards.size();
    for (std::size_t b = 0; round_trip && b < p.boards.size(); ++b) {
        const auto &x = p.boards[b].instructions;
        const auto &y = q.boards[b].instructions;
        round_trip = x.size() == y.size() &&
                     std::equal(x.begin(), x.end(), y.begin(), [](const auto &u, const auto &v) {
                         return encode_control(u) == encode_control(v);
                     });
    }
    {
        auto listing = open_output(dir / "listing.txt");
        write_listing(listing, p);
    }
    Json measures = Json::array(), controls = Json::array();
    for (const auto &m : p.measures) {
        measures.push_back(hex_word(encode_measure(m), 9));
    }
    for (const auto &c : p.boards.at(0).instructions) {
        controls.push_back(hex_word(encode_control(c), 15));
    }
    TagPacket packet = serialize_tag_packet(0b0000'0010, 0x03);
    return {{"experiment", "demo-isa"},
            {"measure_words", measures},
            {"control_words", controls},
            {"binary_round_trip", round_trip},
            {"example_packet", {{"tags", "q1=0 q2=1, q3..q8 disabled"},
                                {"lane_a", hex_word(packet.lane_a, 2)},
                                {"lane_b", hex_word(packet.lane_b, 2)}}}};
}

int run(const RunOptions &o) {
    static const std::vector<std::string> kExperiments = {"reset",      "stabilize", "feedforward",
                                                          "randomwalk", "timing",    "demo-isa"};
    if (std::find(kExperiments.begin(), kExperiments.end(), o.experiment) == kExperiments.end()) {
        throw Error(ErrorKind::InvalidArgument, "unknown experiment '" + o.experiment + "'");
    }
    std::vector<std::string> sets = o.sets;
    if (o.seed) sets.push_back("seed=" + std::to_string(*o.seed));
    if (o.shots) sets.push_back("shots=" + std::to_string(*o.shots));
    if (o.steps) sets.push_back("experiment.steps=" + std::to_string(*o.steps));
    if (o.rounds) sets.push_back("experiment.rounds=" + std::to_string(*o.rounds));
    if (o.threads) sets.push_back("threads=" + std::to_string(*o.threads));
    if (o.ideal) sets.push_back("ideal=true");
    ExperimentConfig cfg = load_config(o.config, sets);

    fs::path dir = o.out.empty() ? fs::path("out") / o.experiment : fs::path(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
    }
    write_json(dir / "resolved-config.json", config_to_json(cfg));

    Json summary;
    if (o.experiment == "reset") {
        auto r = run_reset(cfg);
        summary = reset_summary(r);
        write_reset_outputs(dir, r);
        write_timeline(dir, r.timeline);
    } else if (o.experiment == "stabilize") {
        auto r = run_stabilization(cfg);
        summary = stabilization_summary(r);
        write_stabilization_outputs(dir, r);
        write_timeline(dir, r.timeline);
    } else if (o.experiment == "feedforward") {
        auto r = run_feedforward(cfg);
        summary = feedforward_summary(r);
        write_feedforward_outputs(dir, r);
        write_timeline(dir, r.timeline);
    } else if (o.experiment == "randomwalk") {
        auto r = run_random_walk(cfg, cfg.steps);
        summary = random_walk_summary(r);
        write_random_walk_outputs(dir, r);
        write_timeline(dir, r.timeline);
    } else if (o.experiment == "timing") {
        auto r = run_timing(cfg);
        summary = timing_summary(r);
        std::string report = timing_report(r);
        write_text(dir / "timing.txt", report);
        write_timeline(dir, r.timeline);
        std::cout << report;
    } else {
        summary = demo_isa(cfg, dir);
    }
    write_json(dir / "summary.json", summary);
    std::cout << "wrote " << (dir / "summary.json").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"qfbctl: quantum feedback board simulator"};
    app.require_subcommand(1);

    RunOptions ro;
    auto *run_cmd = app.add_subcommand("run", "run a named experiment");
    run_cmd->add_option("experiment", ro.experiment, "reset | stabilize | feedforward | randomwalk | timing | demo-isa")
        ->required();
    run_cmd->add_option("--config", ro.config, "JSON config merged onto the paper-defaults profile");
    run_cmd->add_option("--out", ro.out, "output directory (default out/<experiment>)");
    run_cmd->add_option("--set", ro.sets, "override, key.path=value (repeatable)");
    run_cmd->add_option("--seed", ro.seed, "64-bit seed");
    run_cmd->add_option("--shots", ro.shots, "shots per setting");
    run_cmd->add_option("--steps", ro.steps, "random walk steps");
    run_cmd->add_option("--rounds", ro.rounds, "feedback rounds");
    run_cmd->add_option("--threads", ro.threads, "worker threads (results do not depend on it)");
    run_cmd->add_flag("--ideal", ro.ideal, "no decoherence, perfect readout");

    std::string asm_in, asm_out, listing_out;
    auto *asm_cmd = app.add_subcommand("assemble", "assemble a source file into a binary program");
    asm_cmd->add_option("source", asm_in, "assembly source")->required();
    asm_cmd->add_option("-o,--output", asm_out, "binary output (default: source with .qfbk)");
    asm_cmd->add_option("--listing", listing_out, "also write a listing");

    std::string dis_in;
    auto *dis_cmd = app.add_subcommand("disasm", "print the listing of a binary program");
    dis_cmd->add_option("binary", dis_in, "binary program")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return report_error("usage", e.what());
    }

    try {
        if (*run_cmd) {
            return run(ro);
        }
        if (*asm_cmd) {
            Program p = assemble_file(asm_in);
            fs::path out = asm_out.empty() ? fs::path(asm_in).replace_extension(".qfbk") : fs::path(asm_out);
            auto bin = open_output(out, true);
            write_program(bin, p);
            if (!listing_out.empty()) {
                auto l = open_output(listing_out);
                write_listing(l, p);
            }
            std::cout << "wrote " << out.string() << '\n';
            return 0;
        }
        std::ifstream in(dis_in, std::ios::binary);
        if (!in) {
            throw Error(ErrorKind::Io, "cannot open '" + dis_in + "'");
        }
        write_listing(std::cout, read_program(in));
        return 0;
    } catch (const Error &e) {
        return report_error(error_kind_name(e.kind()), e.what());
    } catch (const std::exception &e) {
        return report_error("internal", e.what());
    }
}
