#include "tplas/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "tplas/data/partition.hpp"

namespace tplas::data {

const char* to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::mean_shift: return "mean_shift";
        case ShiftKind::variance_shift: return "variance_shift";
        case ShiftKind::period_shift: return "period_shift";
        case ShiftKind::trend_break: return "trend_break";
    }
    return "?";
}

ShiftKind shift_kind_from_string(const std::string& name) {
    if (name == "mean_shift") return ShiftKind::mean_shift;
    if (name == "variance_shift") return ShiftKind::variance_shift;
    if (name == "period_shift") return ShiftKind::period_shift;
    if (name == "trend_break") return ShiftKind::trend_break;
    throw DataError("unknown shift kind '" + name + "'");
}

std::vector<std::string> validate_script(const ShiftScript& script, std::size_t channels,
                                         std::size_t partitions) {
    std::vector<std::string> findings;
    const auto& base = script.base;
    if (base.ar.empty() || (base.ar.size() != 1 && base.ar.size() != channels)) {
        findings.push_back("ar needs 1 or " + std::to_string(channels) + " coefficients, got " +
                           std::to_string(base.ar.size()));
    }
    for (std::size_t i = 0; i < base.ar.size(); ++i) {
        if (!(std::abs(base.ar[i]) < 1.0)) {
            findings.push_back("ar[" + std::to_string(i) + "] must satisfy |phi| < 1");
        }
    }
    if (!(base.period > 0.0)) findings.push_back("seasonal period must be > 0");
    if (!(base.noise_std >= 0.0)) findings.push_back("noise std must be >= 0");
    if (!std::isfinite(base.amplitude)) findings.push_back("seasonal amplitude must be finite");

    for (std::size_t i = 0; i < script.events.size(); ++i) {
        const auto& ev = script.events[i];
        const std::string who = "event " + std::to_string(i);
        if (ev.at_partition >= partitions) {
            findings.push_back(who + " targets partition " + std::to_string(ev.at_partition) +
                               " but P = " + std::to_string(partitions));
        }
        if (i > 0 && ev.at_partition <= script.events[i - 1].at_partition) {
            findings.push_back(who + ": event partitions must be strictly increasing");
        }
        if (!std::isfinite(ev.magnitude)) findings.push_back(who + ": magnitude must be finite");
        if ((ev.kind == ShiftKind::variance_shift || ev.kind == ShiftKind::period_shift) &&
            !(ev.magnitude > 0.0)) {
            findings.push_back(who + ": " + to_string(ev.kind) + " magnitude must be > 0");
        }
    }
    return findings;
}

SyntheticSeries gen_synthetic(const ShiftScript& script, std::size_t length,
                              std::size_t channels, std::size_t partitions, std::uint64_t seed) {
    if (channels < 1) throw DataError("gen_synthetic: C must be >= 1");
    if (const auto findings = validate_script(script, channels, partitions); !findings.empty()) {
        std::ostringstream msg;
        msg << "invalid shift script:";
        for (const auto& f : findings) msg << "\n  " << f;
        throw DataError(msg.str());
    }
    const PartitionPlan plan = make_partitions(length, partitions);

    std::vector<EventRecord> log;
    for (const auto& ev : script.events) {
        log.push_back({ev.at_partition, ev.kind, ev.magnitude,
                       plan.partitions[ev.at_partition].range.begin});
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix values(length, channels);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    for (std::size_t c = 0; c < channels; ++c) {
        const double phi = script.base.ar.size() == 1 ? script.base.ar[0] : script.base.ar[c];
        double sigma = script.base.noise_std;
        double period = script.base.period;
        double level = 0.0;
        double ramp = 0.0;
        double slope = 0.0;
        double phase = two_pi * static_cast<double>(c) / static_cast<double>(channels);
        double ar_state = gauss(rng) * sigma / std::sqrt(1.0 - phi * phi);
        std::size_t next_event = 0;

        for (std::size_t t = 0; t < length; ++t) {
            while (next_event < log.size() && log[next_event].step == t) {
                const auto& ev = log[next_event++];
                switch (ev.kind) {
                    case ShiftKind::mean_shift: level += ev.magnitude; break;
                    case ShiftKind::variance_shift: sigma *= ev.magnitude; break;
                    case ShiftKind::period_shift: period = ev.magnitude; break;
                    case ShiftKind::trend_break:
                        slope += ev.magnitude /
                                 static_cast<double>(plan.partitions[ev.partition].range.size());
                        break;
                }
            }
            if (t > 0) ar_state = phi * ar_state + sigma * gauss(rng);
            values(t, c) = level + ramp + script.base.amplitude * std::sin(phase) + ar_state;
            ramp += slope;
            phase += two_pi / period;
        }
    }
    return {TimeSeries(std::move(values)), std::move(log)};
}

}  // namespace tplas::data
