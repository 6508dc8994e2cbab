#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gftperc {

// RFC-4180 CSV writer: CRLF line endings, quoting only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    const std::string& content() const { return content_; }

private:
    std::string content_;
    std::size_t columns_;
};

// Stable double formatting for reproducible outputs.
std::string format_double(double v);

// Minimal SVG 1.1 line plot (axes, one polyline per series).
struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};
std::string render_svg_plot(const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<SvgSeries>& series);

// FNV-1a 64-bit content checksum, hex-encoded.
std::string fnv1a_hex(const std::string& content);

// Collects output files, writes them under the output directory, and emits
// manifest.json binding every file to its checksum. Re-running with the same
// config reproduces identical checksums; wall_clock_ms is the only field
// that varies between runs.
class RunManifest {
public:
    RunManifest(std::filesystem::path out_dir, std::string config_digest);
    void write_file(const std::string& name, const std::string& content);
    // Returns the manifest path.
    std::filesystem::path finalize(std::int64_t wall_clock_ms);

private:
    std::filesystem::path out_dir_;
    std::string config_digest_;
    std::map<std::string, std::string> checksums_;
};

}  // namespace gftperc
