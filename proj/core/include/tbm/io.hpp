#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "tbm/block_model.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

/// Malformed input file (distinct from configuration errors so the CLI can
/// map it to its own exit code).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor file format `.tsr` (text):
///   line 1: K
///   line 2: d_1 ... d_K
///   then all values in canonical order (last index fastest), whitespace
///   separated, written with full round-trip precision.
void write_tsr(std::ostream& os, const Tensor& t);
void write_tsr_file(const std::string& path, const Tensor& t);
Tensor read_tsr(std::istream& is);
Tensor read_tsr_file(const std::string& path);

/// Block model file format `.tbm` (text):
///   line 1: K
///   line 2: R_1 ... R_K
///   next K lines: the label vector of each mode
///   then core values in canonical order.
void write_tbm(std::ostream& os, const BlockModel& m);
void write_tbm_file(const std::string& path, const BlockModel& m);
BlockModel read_tbm(std::istream& is);
BlockModel read_tbm_file(const std::string& path);

/// Shortest-width decimal that round-trips a double exactly.
std::string format_double(double v);

}  // namespace tbm
