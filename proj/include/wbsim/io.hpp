#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wbsim/analysis.hpp"

// Deterministic text output helpers. All floating-point values go through
// one fixed format so identical runs produce byte-identical files.

namespace wbsim {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& p);
    void header(const std::vector<std::string>& names);
    void row_start();
    void field(double v);
    void field(std::int64_t v);
    void field(const std::string& s);
    void row_end();
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
    bool first_in_row_ = true;
};

// Spectrogram CSV: first row is 0 followed by frame times, each further row
// is the bin frequency followed by magnitudes in dB. Rows above f_max_hz and
// all but every stride-th frame are dropped to keep files reviewable.
void write_spectrogram_csv(const SpectrogramMatrix& spec, const std::filesystem::path& p,
                           double f_max_hz, int frame_stride = 1);

// Binary PGM (P5), highest frequency at the top row, 80 dB dynamic range
// below the matrix maximum.
void write_spectrogram_pgm(const SpectrogramMatrix& spec, const std::filesystem::path& p,
                           double f_max_hz, int frame_stride = 1);

std::vector<std::vector<int>> read_bitmap(const std::filesystem::path& p);
void write_bitmap(const std::vector<std::vector<int>>& bits, const std::filesystem::path& p);

}  // namespace wbsim
