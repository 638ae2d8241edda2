#pragma once

// Star-topology radio layer: frame codec, distance-based RSSI and packet loss.
//
// Frame layout on the air (all multi-byte fields big-endian):
//
//   0x5A | src | dst | seq(2) | kind | len | payload(len) | crc16(2)
//
// The CRC is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection,
// no final xor) over every byte that precedes it.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "hems/domain.hpp"

namespace hems::radio {

enum class FrameKind : std::uint8_t { Reading = 0, Command = 1, Ack = 2 };

inline constexpr std::uint8_t kFrameMagic = 0x5A;
inline constexpr std::size_t kMaxPayload = 64;
inline constexpr std::size_t kFrameOverhead = 9;

struct Frame {
    NodeId src;
    NodeId dst;
    std::uint16_t seq = 0;
    FrameKind kind = FrameKind::Reading;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_frame(const Frame& frame);
Frame decode_frame(std::span<const std::uint8_t> bytes);

struct CalibrationPoint {
    double distance_m;
    double rssi_dbm;
};

struct ChannelParams {
    // Received signal strength measured across a house at four distances.
    std::vector<CalibrationPoint> calibration{{5.0, -39.0}, {10.0, -53.0}, {15.0, -69.0}, {20.0, -80.0}};
    double loss_onset_m = 16.0;
    double loss_full_m = 20.0;
    double elevation_bonus_m = 2.0;
};

void validate(const ChannelParams& params);

struct RadioLink {
    NodeId node;
    double distance_m = 0.0;
    bool elevation_bonus = false;
};

struct Delivered {
    Frame frame;
    double rssi_dbm = 0.0;
    SimTime at;
};

struct Dropped {
    SimTime at;
};

using TransmitResult = std::variant<Delivered, Dropped>;

inline bool delivered(const TransmitResult& r) { return std::holds_alternative<Delivered>(r); }

/// Owns the channel RNG. Every transmit() consumes exactly one draw, so a run
/// with a fixed seed and a fixed transmit order is reproducible bit for bit.
/// There is no collision model: frames sent in the same tick are independent.
class ChannelModel {
public:
    explicit ChannelModel(ChannelParams params = {}, std::uint64_t seed = 0);

    const ChannelParams& params() const { return params_; }

    double rssi_at(double distance_m) const;
    double loss_probability(double distance_m) const;
    double effective_distance(const RadioLink& link) const;

    TransmitResult transmit(const RadioLink& link, const Frame& frame, SimTime now);

    std::uint64_t draws() const { return draws_; }

private:
    double next_uniform();

    ChannelParams params_;
    std::mt19937_64 rng_;
    std::uint64_t draws_ = 0;
};

}  // namespace hems::radio
