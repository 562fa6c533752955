#pragma once

#include "permboot/empirical.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace permboot {

// 17 significant digits, "inf"/"-inf" for infinities.
[[nodiscard]] std::string format_real(double x);
[[nodiscard]] double parse_real(std::string_view text);

// CSV ingestion. The header selects the mode: `group,value` (plain) or
// `group,time,status` (survival, status in {0,1}). Group labels are numbered
// in order of first appearance.
struct SampleTable {
    SampleKind kind = SampleKind::Plain;
    std::vector<std::string> labels;
    std::vector<std::vector<Observation>> groups;
};

// Any number of groups; read_samples_csv additionally requires two or more.
[[nodiscard]] SampleTable read_sample_table(std::istream& is);
[[nodiscard]] SampleTable read_sample_table(const std::filesystem::path& path);
[[nodiscard]] MultiSampleData read_samples_csv(std::istream& is);
[[nodiscard]] MultiSampleData read_samples_csv(const std::filesystem::path& path);
void write_samples_csv(std::ostream& os, const MultiSampleData& data);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace permboot
