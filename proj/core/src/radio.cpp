#include "hems/radio.hpp"

#include <algorithm>
#include <string>

namespace hems::radio {

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t b : bytes) {
        crc ^= static_cast<std::uint16_t>(b) << 8;
        for (int i = 0; i < 8; ++i) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
    }
    return crc;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    if (frame.payload.size() > kMaxPayload) {
        throw Error(Errc::PayloadTooLarge,
                    "payload of " + std::to_string(frame.payload.size()) + " bytes exceeds 64");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kFrameOverhead + frame.payload.size());
    out.push_back(kFrameMagic);
    out.push_back(frame.src.value);
    out.push_back(frame.dst.value);
    out.push_back(static_cast<std::uint8_t>(frame.seq >> 8));
    out.push_back(static_cast<std::uint8_t>(frame.seq & 0xFF));
    out.push_back(static_cast<std::uint8_t>(frame.kind));
    out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    const std::uint16_t crc = crc16_ccitt_false(out);
    out.push_back(static_cast<std::uint8_t>(crc >> 8));
    out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameOverhead) throw Error(Errc::Truncated, "frame shorter than header");
    const std::size_t len = bytes[6];
    if (bytes.size() < kFrameOverhead + len) throw Error(Errc::Truncated, "frame shorter than declared payload");

    const std::size_t body = 7 + len;
    const std::uint16_t want = static_cast<std::uint16_t>((bytes[body] << 8) | bytes[body + 1]);
    if (crc16_ccitt_false(bytes.first(body)) != want) throw Error(Errc::ChecksumMismatch, "frame checksum mismatch");
    // Checked after the CRC so that a corrupted magic byte reports as corruption.
    if (bytes[0] != kFrameMagic) throw Error(Errc::UnknownKind, "bad frame magic");
    if (len > kMaxPayload) throw Error(Errc::PayloadTooLarge, "declared payload exceeds 64 bytes");
    if (bytes[5] > static_cast<std::uint8_t>(FrameKind::Ack)) {
        throw Error(Errc::UnknownKind, "unknown frame kind " + std::to_string(bytes[5]));
    }

    Frame f;
    f.src = NodeId{bytes[1]};
    f.dst = NodeId{bytes[2]};
    f.seq = static_cast<std::uint16_t>((bytes[3] << 8) | bytes[4]);
    f.kind = static_cast<FrameKind>(bytes[5]);
    f.payload.assign(bytes.begin() + 7, bytes.begin() + static_cast<std::ptrdiff_t>(body));
    return f;
}

void validate(const ChannelParams& params) {
    if (params.calibration.empty()) throw Error(Errc::Config, "channel needs at least one calibration point");
    for (std::size_t i = 1; i < params.calibration.size(); ++i) {
        if (!(params.calibration[i].distance_m > params.calibration[i - 1].distance_m)) {
            throw Error(Errc::Config, "calibration distances must be strictly increasing");
        }
    }
    if (params.calibration.front().distance_m < 0.0) throw Error(Errc::Config, "negative calibration distance");
    if (!(params.loss_onset_m < params.loss_full_m)) throw Error(Errc::Config, "loss onset must be below full loss");
    if (params.elevation_bonus_m < 0.0) throw Error(Errc::Config, "negative elevation bonus");
}

ChannelModel::ChannelModel(ChannelParams params, std::uint64_t seed) : params_(std::move(params)), rng_(seed) {
    validate(params_);
}

double ChannelModel::rssi_at(double distance_m) const {
    const auto& pts = params_.calibration;
    if (pts.size() == 1 || distance_m <= pts.front().distance_m) return pts.front().rssi_dbm;

    // Segment [i-1, i] containing the distance; beyond the last point the
    // final segment is extended.
    auto it = std::upper_bound(pts.begin(), pts.end(), distance_m,
                               [](double d, const CalibrationPoint& p) { return d < p.distance_m; });
    std::size_t i = it == pts.end() ? pts.size() - 1 : static_cast<std::size_t>(it - pts.begin());
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    if (distance_m == b.distance_m) return b.rssi_dbm;
    const double t = (distance_m - a.distance_m) / (b.distance_m - a.distance_m);
    return a.rssi_dbm + t * (b.rssi_dbm - a.rssi_dbm);
}

double ChannelModel::loss_probability(double distance_m) const {
    if (distance_m <= params_.loss_onset_m) return 0.0;
    if (distance_m >= params_.loss_full_m) return 1.0;
    return (distance_m - params_.loss_onset_m) / (params_.loss_full_m - params_.loss_onset_m);
}

double ChannelModel::effective_distance(const RadioLink& link) const {
    if (!link.elevation_bonus) return link.distance_m;
    return std::max(0.0, link.distance_m - params_.elevation_bonus_m);
}

double ChannelModel::next_uniform() {
    ++draws_;
    // 53 high bits -> [0, 1); independent of the standard library's
    // distribution implementation.
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

TransmitResult ChannelModel::transmit(const RadioLink& link, const Frame& frame, SimTime now) {
    const double d = effective_distance(link);
    const double u = next_uniform();
    if (u < loss_probability(d)) return Dropped{now};
    return Delivered{frame, rssi_at(d), now};
}

}  // namespace hems::radio
