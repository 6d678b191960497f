#include "afenet/band_analysis.hpp"

#include <iomanip>

#include "afenet/dct.hpp"
#include "afenet/error.hpp"

namespace afenet {

const char* band_name(Band b) {
  switch (b) {
    case Band::low: return "low";
    case Band::mid: return "mid";
    case Band::high: return "high";
  }
  return "?";
}

std::int64_t BandMask::count() const {
  std::int64_t n = 0;
  for (auto m : membership) n += m;
  return n;
}

Band band_of(std::int64_t u, std::int64_t v, std::int64_t h, std::int64_t w) {
  // (u/h + v/w)/2 < k/3  <=>  3 (u w + v h) < 2 k h w, exact in integers.
  const std::int64_t lhs = 3 * (u * w + v * h);
  if (lhs < 2 * h * w) return Band::low;
  if (lhs < 4 * h * w) return Band::mid;
  return Band::high;
}

std::array<BandMask, 3> partition_bands(std::int64_t h, std::int64_t w) {
  if (h < 3 || w < 3) {
    throw InvalidArgument("partition_bands: spectrum must be at least 3x3, got " +
                          std::to_string(h) + "x" + std::to_string(w));
  }
  std::array<BandMask, 3> masks;
  for (int b = 0; b < 3; ++b) {
    masks[b] = BandMask{static_cast<Band>(b), h, w,
                        std::vector<std::uint8_t>(static_cast<std::size_t>(h * w), 0)};
  }
  for (std::int64_t u = 0; u < h; ++u) {
    for (std::int64_t v = 0; v < w; ++v) {
      masks[static_cast<int>(band_of(u, v, h, w))].membership[static_cast<std::size_t>(u * w + v)] = 1;
    }
  }
  return masks;
}

BandStats analyze_pair(const PairedSample& pair) {
  if (pair.rainy.height != pair.clean.height || pair.rainy.width != pair.clean.width) {
    throw InvalidArgument("analyze_pair: rainy and clean dimensions differ");
  }
  const Plane rainy = dct2(rgb_to_luminance(to_unit(pair.rainy)));
  const Plane clean = dct2(rgb_to_luminance(to_unit(pair.clean)));
  const std::int64_t h = rainy.height, w = rainy.width;
  if (h < 3 || w < 3) throw InvalidArgument("analyze_pair: image must be at least 3x3");

  std::array<double, 3> energy{}, sq_err{};
  std::array<std::int64_t, 3> count{};
  for (std::int64_t u = 0; u < h; ++u) {
    for (std::int64_t v = 0; v < w; ++v) {
      const int b = static_cast<int>(band_of(u, v, h, w));
      const double r = rainy.at(u, v);
      const double d = r - clean.at(u, v);
      energy[b] += r * r;
      sq_err[b] += d * d;
      ++count[b];
    }
  }
  BandStats s;
  s.energy_low = energy[0];
  s.energy_mid = energy[1];
  s.energy_high = energy[2];
  s.mse_low = sq_err[0] / static_cast<double>(count[0]);
  s.mse_mid = sq_err[1] / static_cast<double>(count[1]);
  s.mse_high = sq_err[2] / static_cast<double>(count[2]);
  return s;
}

CorpusReport analyze_corpus(std::span<const PairedSample> pairs) {
  if (pairs.empty()) throw InvalidArgument("analyze_corpus: no pairs");
  CorpusReport report;
  for (const auto& p : pairs) {
    report.names.push_back(p.name);
    report.rows.push_back(analyze_pair(p));
  }
  const double inv = 1.0 / static_cast<double>(report.rows.size());
  BandStats& m = report.mean;
  for (const auto& r : report.rows) {
    m.energy_low += r.energy_low;
    m.energy_mid += r.energy_mid;
    m.energy_high += r.energy_high;
    m.mse_low += r.mse_low;
    m.mse_mid += r.mse_mid;
    m.mse_high += r.mse_high;
  }
  m.energy_low *= inv;
  m.energy_mid *= inv;
  m.energy_high *= inv;
  m.mse_low *= inv;
  m.mse_mid *= inv;
  m.mse_high *= inv;
  return report;
}

namespace {
void write_row(std::ostream& os, const std::string& name, const BandStats& s) {
  os << name << ',' << s.energy_low << ',' << s.energy_mid << ',' << s.energy_high << ','
     << s.mse_low << ',' << s.mse_mid << ',' << s.mse_high << '\n';
}
}  // namespace

void write_band_csv(std::ostream& os, const CorpusReport& report) {
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  os << "# band_partition=normalized_antidiagonal (u/h+v/w)/2 thresholds=1/3,2/3\n"
     << "# transform=full_image_orthonormal_dct2 channel=luminance_bt601_unit_range\n"
     << "# energy_source=rainy mse=mean_over_band((dct2(rainy)-dct2(clean))^2)\n"
     << "name,energy_low,energy_mid,energy_high,mse_low,mse_mid,mse_high\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) write_row(os, report.names[i], report.rows[i]);
  write_row(os, "MEAN", report.mean);
  os.precision(old_precision);
}

}  // namespace afenet
