#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "afenet/image.hpp"

namespace afenet {

enum class Band { low = 0, mid = 1, high = 2 };

const char* band_name(Band b);

/// Membership of DCT coefficient indices in one frequency band.
struct BandMask {
  Band band = Band::low;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::uint8_t> membership;  ///< row-major, 1 = in band

  bool contains(std::int64_t u, std::int64_t v) const {
    return membership[static_cast<std::size_t>(u * width + v)] != 0;
  }
  std::int64_t count() const;
};

/// Band of coefficient (u, v): normalized anti-diagonal r = (u/h + v/w) / 2,
/// low below 1/3, mid below 2/3, high otherwise.
Band band_of(std::int64_t u, std::int64_t v, std::int64_t h, std::int64_t w);

/// The low/mid/high masks of an h x w spectrum; h, w >= 3.
std::array<BandMask, 3> partition_bands(std::int64_t h, std::int64_t w);

struct BandStats {
  double energy_low = 0.0;
  double energy_mid = 0.0;
  double energy_high = 0.0;
  double mse_low = 0.0;
  double mse_mid = 0.0;
  double mse_high = 0.0;

  double total_energy() const { return energy_low + energy_mid + energy_high; }
};

/// Band energies of the rainy luminance spectrum and per-band mean squared
/// spectral difference between rainy and clean (unit-range luminance).
BandStats analyze_pair(const PairedSample& pair);

struct CorpusReport {
  std::vector<std::string> names;
  std::vector<BandStats> rows;
  BandStats mean;
};

/// Per-pair statistics in input order plus their arithmetic mean.
CorpusReport analyze_corpus(std::span<const PairedSample> pairs);

/// CSV with '#' metadata lines (thresholds, energy source, channel), the
/// header `name,energy_low,energy_mid,energy_high,mse_low,mse_mid,mse_high`,
/// one row per pair and a final MEAN row.
void write_band_csv(std::ostream& os, const CorpusReport& report);

}  // namespace afenet
