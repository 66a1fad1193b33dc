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


// Physics backend for BoardEngine: one density matrix per channel, idle and
// drive propagators built from the Lindblad integrator, dispersive readout,
// and readout crosstalk (a qubit may follow a different Lindblad model while
// another qubit's readout pulse is on).

#ifndef QFB_BACKEND_HPP
#define QFB_BACKEND_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "qfb/engine.hpp"
#include "qfb/error.hpp"
#include "qfb/physics.hpp"
#include "qfb/readout.hpp"
#include "qfb/rng.hpp"

namespace qfb {

struct QubitModel {
    DensityMatrix initial = DensityMatrix::ground();
    LindbladModel nominal;
    /// Model used while another channel's readout pulse is on.
    std::optional<LindbladModel> during_other_readout;
    ReadoutModel readout = ReadoutModel::perfect();
    /// Drive segments evolve unitarily (no decoherence, no detuning).
    bool ideal_gates = false;
};

/// Memoized channel maps. Keys do not include model parameters, so one cache
/// must only serve a single, fixed set of qubit models.
class PropagatorCache {
   public:
    explicit PropagatorCache(double dt_ns = 1.0) : dt_(dt_ns) {
        if (!(dt_ns > 0)) {
            throw Error(ErrorKind::InvalidArgument, "integration step must be positive");
        }
    }

    double dt() const { return dt_; }

    const Superoperator &idle(int qubit, int variant, const LindbladModel &model, std::int64_t duration) {
        auto key = std::make_tuple(qubit, variant, duration);
        auto it = idle_.find(key);
        if (it == idle_.end()) {
            DriveSegment seg{{}, static_cast<double>(duration)};
            it = idle_.emplace(key, Superoperator::integrate(model, std::span(&seg, 1), dt_)).first;
        }
        return it->second;
    }

    const Superoperator &drive(int qubit, int variant, const LindbladModel &model, const SegmentKey &seg,
                               std::uint32_t offset, std::span<const DriveAmplitude> samples) {
        auto key = std::make_tuple(qubit, variant, seg.board, seg.address0, seg.address1, offset,
                                   static_cast<std::uint32_t>(samples.size()));
        auto it = drive_.find(key);
        if (it == drive_.end()) {
            auto segments = segments_from_samples(samples);
            it = drive_.emplace(key, Superoperator::integrate(model, segments, dt_)).first;
        }
        return it->second;
    }

   private:
    double dt_;
    std::map<std::tuple<int, int, std::int64_t>, Superoperator> idle_;
    std::map<std::tuple<int, int, int, std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t>, Superoperator>
        drive_;
};

enum class ReadoutMode {
    Sampled,  // Born-rule collapse and IQ sampling from the shot's stream
    Forced,   // outcome tags dictated per channel; state conditioned exactly
};

class PhysicsBackend {
   public:
    PhysicsBackend(std::span<const std::optional<QubitModel>> channels, PropagatorCache &cache, ShotRng *rng)
        : cache_(cache), rng_(rng) {
        if (channels.size() > static_cast<std::size_t>(kChannels)) {
            throw Error(ErrorKind::InvalidArgument, "more qubit models than channels");
        }
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
            if (channels[ch]) {
                q_[ch].model = &*channels[ch];
                q_[ch].rho = channels[ch]->initial;
            }
        }
    }

    /// Switches to forced mode: readouts of `channel` return the given tags in
    /// order and the backend keeps the conditional (normalized) state.
    void force_tags(int channel, std::vector<int> tags) {
        mode_ = ReadoutMode::Forced;
        forced_[channel] = std::move(tags);
    }

    /// Probability of the forced tag history so far.
    double weight() const { return weight_; }

    const DensityMatrix &state(int channel) const { return q(channel).rho; }

    /// Pre-collapse states at each readout of `channel`.
    const std::vector<DensityMatrix> &snapshots(int channel) const { return q(channel).snapshots; }

    ReadoutSample readout(int channel, std::int64_t t_start, std::int64_t t_end) {
        Qubit &qb = q(channel);
        advance(channel, t_start);
        qb.snapshots.push_back(qb.rho);
        ReadoutSample out;
        const ReadoutModel &rm = qb.model->readout;
        auto it = forced_.find(channel);
        if (mode_ == ReadoutMode::Forced && it != forced_.end()) {
            std::size_t k = qb.readouts;
            if (k >= it->second.size()) {
                throw Error(ErrorKind::ExecutionFault, "forced tag history exhausted");
            }
            int tag = it->second[k];
            double r00 = std::clamp(qb.rho.population(0), 0.0, 1.0);
            double r11 = 1 - r00;
            double g0 = rm.right_of_threshold(rm.center0);  // P(tag 0 | ground cloud)
            double e0 = rm.right_of_threshold(rm.center1);  // P(tag 0 | excited cloud)
            auto pick = [tag](double p0) { return tag == 0 ? p0 : 1 - p0; };
            double w_ground = r00 * pick(g0) + r11 * rm.decay_mix * pick(g0);
            double w_excited = r11 * (1 - rm.decay_mix) * pick(e0);
            double p = w_ground + w_excited;
            weight_ *= p;
            qb.rho = p > 0 ? DensityMatrix::assume_physical({w_ground / p, 0.0, 0.0, w_excited / p})
                           : DensityMatrix::ground();
            out.outcome = tag;
            out.iq = tag == 0 ? rm.center0 : rm.center1;
        } else if (!rng_ && mode_ == ReadoutMode::Forced) {
            // Channel left free in a forced run: non-selective measurement. The
            // weight is untouched and the reported tag is the likelier one.
            const Mat2 &m = qb.rho.matrix();
            double r00 = std::clamp(m.a00.real(), 0.0, 1.0);
            double p0 = r00 * rm.tag0_probability(0) + (1 - r00) * rm.tag0_probability(1);
            out.outcome = p0 >= 0.5 ? 0 : 1;
            out.iq = out.outcome == 0 ? rm.center0 : rm.center1;
            qb.rho = DensityMatrix::assume_physical({r00, 0.0, 0.0, 1 - r00});
        } else {
            if (!rng_) {
                throw Error(ErrorKind::InvalidArgument, "sampled readout needs a random stream");
            }
            ReadoutShot shot = simulate_readout(qb.rho, rm, *rng_);
            qb.rho = shot.post_state;
            out.outcome = shot.outcome;
            out.iq = shot.iq;
        }
        ++qb.readouts;
        qb.frozen_until = std::max(qb.frozen_until, t_end);
        windows_.push_back({channel, t_start, t_end});
        return out;
    }

    void drive(int qubit, std::int64_t t_start, std::span<const DriveAmplitude> samples, const SegmentKey &key) {
        Qubit &qb = q(qubit);
        advance(qubit, t_start);
        if (t_start < qb.frozen_until) {
            throw Error(ErrorKind::ExecutionFault, "pulse on channel " + std::to_string(qubit + 1) +
                                                       " while it is being read out");
        }
        std::int64_t t_end = t_start + static_cast<std::int64_t>(samples.size());
        for (auto [a, b, variant] : pieces(qubit, t_start, t_end)) {
            auto offset = static_cast<std::uint32_t>(a - t_start);
            if (qb.model->ideal_gates) {
                variant = 2;
            }
            const Superoperator &s = cache_.drive(qubit, variant, model_for(qb, variant), key, offset,
                                                  samples.subspan(offset, static_cast<std::size_t>(b - a)));
            qb.rho = s.apply(qb.rho);
        }
        qb.t = t_end;
    }

    void finish(std::int64_t t) {
        for (int ch = 0; ch < kChannels; ++ch) {
            if (q_[ch].model) {
                advance(ch, std::max(t, q_[ch].t));
            }
        }
    }

   private:
    struct Qubit {
        const QubitModel *model = nullptr;
        DensityMatrix rho;
        std::int64_t t = 0;
        std::int64_t frozen_until = 0;
        std::size_t readouts = 0;
        std::vector<DensityMatrix> snapshots;
    };

    struct Window {
        int channel;
        std::int64_t start, end;
    };

    Qubit &q(int channel) {
        if (channel < 0 || channel >= kChannels || !q_[channel].model) {
            throw Error(ErrorKind::ExecutionFault, "no qubit attached to channel " + std::to_string(channel + 1));
        }
        return q_[channel];
    }
    const Qubit &q(int channel) const { return const_cast<PhysicsBackend *>(this)->q(channel); }

    static const LindbladModel &model_for(const Qubit &qb, int variant) {
        static const LindbladModel closed = LindbladModel::closed();
        return variant == 2 ? closed : variant == 1 ? *qb.model->during_other_readout : qb.model->nominal;
    }

    /// Splits [a, b) where other channels' readout windows start or stop.
    std::vector<std::tuple<std::int64_t, std::int64_t, int>> pieces(int channel, std::int64_t a, std::int64_t b) const {
        std::vector<std::int64_t> cuts{a, b};
        bool crosstalk = q_[channel].model->during_other_readout.has_value();
        if (crosstalk) {
            for (const auto &w : windows_) {
                if (w.channel == channel) {
                    continue;
                }
                for (std::int64_t c : {w.start, w.end}) {
                    if (c > a && c < b) {
                        cuts.push_back(c);
                    }
                }
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<std::tuple<std::int64_t, std::int64_t, int>> out;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            std::int64_t lo = cuts[k];
            std::int64_t hi = cuts[k + 1];
            int variant = 0;
            if (crosstalk) {
                for (const auto &w : windows_) {
                    if (w.channel != channel && w.start <= lo && hi <= w.end) {
                        variant = 1;
                    }
                }
            }
            out.emplace_back(lo, hi, variant);
        }
        return out;
    }

    void advance(int channel, std::int64_t t) {
        Qubit &qb = q_[channel];
        if (t < qb.t) {
            throw Error(ErrorKind::ExecutionFault, "channel " + std::to_string(channel + 1) + " driven out of order");
        }
        // A qubit under its own readout is left untouched until the pulse ends.
        if (qb.frozen_until > qb.t) {
            qb.t = std::min(t, qb.frozen_until);
        }
        if (t > qb.t) {
            for (const auto &[a, b, variant] : pieces(channel, qb.t, t)) {
                qb.rho = cache_.idle(channel, variant, model_for(qb, variant), b - a).apply(qb.rho);
            }
            qb.t = t;
        }
    }

    std::array<Qubit, kChannels> q_{};
    PropagatorCache &cache_;
    ShotRng *rng_;
    ReadoutMode mode_ = ReadoutMode::Sampled;
    std::map<int, std::vector<int>> forced_;
    double weight_ = 1.0;
    std::vector<Window> windows_;
};

}  // namespace qfb

#endif  // QFB_BACKEND_HPP
