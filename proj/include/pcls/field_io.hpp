#pragma once

// Self-describing field files.
//
//   pcls-field 1
//   kind nodal | quad-vector
//   dim <cells per axis>
//   domain <x_min> <x_max> <y_min> <y_max>
//   q_per_cell 4                   (quad-vector only)
//   weights <w0> <w1> <w2> <w3>    (quad-vector only)
//   encoding text | binary
//   count <values>                 (nodes, or cells * q_per_cell vectors)
//   data
//
// Text payloads hold one value (nodal) or one "x y" pair (quad-vector) per
// line rendered with 17 significant digits. Binary payloads follow the data
// line directly as little-endian IEEE doubles.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "pcls/mesh_fem.hpp"

namespace pcls {

class FieldParseError : public std::runtime_error {
 public:
  FieldParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

enum class Encoding { text, binary };

using AnyField = std::variant<NodalField, QuadVectorField>;

void write_field(const std::filesystem::path& path, const NodalField& field,
                 Encoding encoding = Encoding::text);
void write_field(const std::filesystem::path& path, const QuadVectorField& field,
                 Encoding encoding = Encoding::text);

AnyField read_field(const std::filesystem::path& path);
NodalField read_nodal_field(const std::filesystem::path& path);
QuadVectorField read_quad_field(const std::filesystem::path& path);

// Serialization to and from strings; `name` only labels parse errors.
std::string format_field(const NodalField& field, Encoding encoding = Encoding::text);
std::string format_field(const QuadVectorField& field, Encoding encoding = Encoding::text);
AnyField parse_field(const std::string& contents, const std::string& name = "<memory>");

/// Number of nodes where two binary fields differ.
int compare_fields(const NodalField& a, const NodalField& b);

}  // namespace pcls
