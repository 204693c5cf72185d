#include "wbsim/io.hpp"

#include <algorithm>
#include <stdexcept>

namespace wbsim {

CsvWriter::CsvWriter(const std::filesystem::path& p) : path_(p), out_(p, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + p.string());
}

void CsvWriter::header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out_ << ',';
        out_ << names[i];
    }
    out_ << '\n';
}

void CsvWriter::row_start() { first_in_row_ = true; }

void CsvWriter::field(double v) {
    if (!first_in_row_) out_ << ',';
    out_ << format_number(v);
    first_in_row_ = false;
}

void CsvWriter::field(std::int64_t v) {
    if (!first_in_row_) out_ << ',';
    out_ << v;
    first_in_row_ = false;
}

void CsvWriter::field(const std::string& s) {
    if (!first_in_row_) out_ << ',';
    out_ << s;
    first_in_row_ = false;
}

void CsvWriter::row_end() { out_ << '\n'; }

namespace {

std::size_t bins_up_to(const SpectrogramMatrix& spec, double f_max_hz) {
    std::size_t n = 0;
    while (n < spec.frequencies.size() && spec.frequencies[n] <= f_max_hz) ++n;
    return std::max<std::size_t>(n, 2);
}

}  // namespace

void write_spectrogram_csv(const SpectrogramMatrix& spec, const std::filesystem::path& p,
                           double f_max_hz, int frame_stride) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    std::size_t nbins = bins_up_to(spec, f_max_hz);
    out << "0";
    for (std::size_t t = 0; t < spec.times.size(); t += std::size_t(frame_stride))
        out << ',' << format_number(spec.times[t]);
    out << '\n';
    for (std::size_t b = 0; b < nbins; ++b) {
        out << format_number(spec.frequencies[b]);
        for (std::size_t t = 0; t < spec.times.size(); t += std::size_t(frame_stride))
            out << ',' << format_number(spec.magnitudes_db[t][b]);
        out << '\n';
    }
}

void write_spectrogram_pgm(const SpectrogramMatrix& spec, const std::filesystem::path& p,
                           double f_max_hz, int frame_stride) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    std::size_t nbins = bins_up_to(spec, f_max_hz);
    std::size_t nframes = (spec.times.size() + std::size_t(frame_stride) - 1) /
                          std::size_t(frame_stride);
    double peak = -1e30;
    for (std::size_t t = 0; t < spec.times.size(); t += std::size_t(frame_stride))
        for (std::size_t b = 0; b < nbins; ++b)
            peak = std::max(peak, spec.magnitudes_db[t][b]);
    out << "P5\n" << nframes << ' ' << nbins << "\n255\n";
    for (std::size_t row = 0; row < nbins; ++row) {
        std::size_t b = nbins - 1 - row;  // top row = highest frequency
        for (std::size_t t = 0; t < spec.times.size(); t += std::size_t(frame_stride)) {
            double rel = spec.magnitudes_db[t][b] - peak;  // <= 0
            double v = std::clamp(255.0 * (rel + 80.0) / 80.0, 0.0, 255.0);
            out.put(char(int(v)));
        }
    }
}

std::vector<std::vector<int>> read_bitmap(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open bitmap " + p.string());
    std::vector<std::vector<int>> bits;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::vector<int> row;
        row.reserve(line.size());
        for (char ch : line) {
            if (ch == '0') row.push_back(0);
            else if (ch == '1') row.push_back(1);
            else throw std::runtime_error("bitmap " + p.string() + ": invalid character");
        }
        if (!bits.empty() && row.size() != bits.front().size())
            throw std::runtime_error("bitmap " + p.string() + ": ragged rows");
        bits.push_back(std::move(row));
    }
    if (bits.empty()) throw std::runtime_error("bitmap " + p.string() + ": empty");
    return bits;
}

void write_bitmap(const std::vector<std::vector<int>>& bits, const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    for (const auto& row : bits) {
        for (int b : row) out << (b ? '1' : '0');
        out << '\n';
    }
}

}  // namespace wbsim
