#include "pcls/field_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace pcls {

namespace {

constexpr const char* kMagic = "pcls-field 1";

static_assert(std::endian::native == std::endian::little,
              "binary field payloads assume a little-endian host");

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void append_header(std::string& out, const char* kind, const Grid& grid) {
  out += kMagic;
  out += '\n';
  out += "kind ";
  out += kind;
  out += "\ndim " + std::to_string(grid.dim()) + "\ndomain ";
  append_double(out, grid.x_min());
  out += ' ';
  append_double(out, grid.x_max());
  out += ' ';
  append_double(out, grid.y_min());
  out += ' ';
  append_double(out, grid.y_max());
  out += '\n';
}

void append_tail(std::string& out, Encoding encoding, std::size_t count) {
  out += encoding == Encoding::text ? "encoding text\n" : "encoding binary\n";
  out += "count " + std::to_string(count) + "\ndata\n";
}

void append_raw(std::string& out, const double* data, std::size_t n) {
  const std::size_t start = out.size();
  out.resize(start + n * sizeof(double));
  std::memcpy(out.data() + start, data, n * sizeof(double));
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  os.close();
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Line-oriented cursor over the file contents.
class Reader {
 public:
  Reader(const std::string& text, std::string name) : text_(text), name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& what) const { throw FieldParseError(name_, line_, what); }

  bool at_end() const { return pos_ >= text_.size(); }

  std::string next_line() {
    if (at_end()) {
      ++line_;
      fail("unexpected end of file");
    }
    const std::size_t nl = text_.find('\n', pos_);
    const std::size_t end = nl == std::string::npos ? text_.size() : nl;
    std::string line = text_.substr(pos_, end - pos_);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos_ = nl == std::string::npos ? text_.size() : nl + 1;
    ++line_;
    return line;
  }

  /// Reads "key v1 v2 ..." and returns the value tokens.
  std::vector<std::string> keyed(const std::string& key, std::size_t n_values) {
    const std::string line = next_line();
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) fail("expected '" + key + "', found '" + line + "'");
    std::vector<std::string> values;
    std::string tok;
    while (ss >> tok) values.push_back(tok);
    if (values.size() != n_values)
      fail("'" + key + "' expects " + std::to_string(n_values) + " value(s), found " +
           std::to_string(values.size()));
    return values;
  }

  double to_double(const std::string& tok) const {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("malformed number '" + tok + "'");
    if (!std::isfinite(v)) fail("non-finite value '" + tok + "'");
    return v;
  }

  long long to_int(const std::string& tok) const {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("malformed integer '" + tok + "'");
    return v;
  }

  /// Reads `n` lines of `per_line` numbers each.
  std::vector<double> text_payload(std::size_t n, std::size_t per_line) {
    std::vector<double> out;
    out.reserve(n * per_line);
    for (std::size_t k = 0; k < n; ++k) {
      if (at_end()) {
        ++line_;
        fail("payload ends after " + std::to_string(k) + " of " + std::to_string(n) + " expected entries");
      }
      const std::string line = next_line();
      std::istringstream ss(line);
      std::string tok;
      std::size_t got = 0;
      while (ss >> tok) {
        if (got == per_line) fail("too many numbers on payload line");
        out.push_back(to_double(tok));
        ++got;
      }
      if (got != per_line)
        fail("payload line holds " + std::to_string(got) + " number(s), expected " + std::to_string(per_line));
    }
    while (!at_end()) {
      const std::string line = next_line();
      if (line.find_first_not_of(" \t") != std::string::npos)
        fail("payload longer than the declared count " + std::to_string(n));
    }
    return out;
  }

  std::vector<double> binary_payload(std::size_t n_doubles) {
    const std::size_t bytes = n_doubles * sizeof(double);
    const std::size_t avail = text_.size() - pos_;
    if (avail != bytes)
      fail("binary payload holds " + std::to_string(avail) + " bytes, expected " + std::to_string(bytes));
    std::vector<double> out(n_doubles);
    std::memcpy(out.data(), text_.data() + pos_, bytes);
    pos_ = text_.size();
    for (double v : out)
      if (!std::isfinite(v)) fail("non-finite value in binary payload");
    return out;
  }

 private:
  const std::string& text_;
  std::string name_;
  std::size_t pos_ = 0;
  int line_ = 0;
};

}  // namespace

std::string format_field(const NodalField& field, Encoding encoding) {
  if (!field.all_finite()) throw std::invalid_argument("write_field: field has non-finite values");
  const auto n = static_cast<std::size_t>(field.values.size());
  std::string out;
  append_header(out, "nodal", field.grid);
  append_tail(out, encoding, n);
  if (encoding == Encoding::binary) {
    append_raw(out, field.values.data(), n);
    return out;
  }
  out.reserve(out.size() + n * 24);
  for (std::size_t k = 0; k < n; ++k) {
    append_double(out, field.values[static_cast<Eigen::Index>(k)]);
    out += '\n';
  }
  return out;
}

std::string format_field(const QuadVectorField& field, Encoding encoding) {
  const std::size_t n = field.vectors.size();
  for (const auto& v : field.vectors)
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw std::invalid_argument("write_field: field has non-finite values");
  std::string out;
  append_header(out, "quad-vector", field.grid);
  out += "q_per_cell " + std::to_string(field.q_per_cell) + "\nweights";
  for (double w : field.quad_weights) {
    out += ' ';
    append_double(out, w);
  }
  out += '\n';
  append_tail(out, encoding, n);
  if (encoding == Encoding::binary) {
    std::vector<double> flat(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      flat[2 * k] = field.vectors[k].x;
      flat[2 * k + 1] = field.vectors[k].y;
    }
    append_raw(out, flat.data(), flat.size());
    return out;
  }
  out.reserve(out.size() + n * 48);
  for (const auto& v : field.vectors) {
    append_double(out, v.x);
    out += ' ';
    append_double(out, v.y);
    out += '\n';
  }
  return out;
}

AnyField parse_field(const std::string& contents, const std::string& name) {
  Reader r(contents, name);
  if (r.next_line() != kMagic) r.fail("missing 'pcls-field 1' header");

  const std::string kind = r.keyed("kind", 1)[0];
  if (kind != "nodal" && kind != "quad-vector") r.fail("unknown kind '" + kind + "'");

  const long long dim = r.to_int(r.keyed("dim", 1)[0]);
  if (dim < 2 || dim > 1000000) r.fail("dim must be >= 2, got " + std::to_string(dim));
  const Grid grid = build_grid(static_cast<int>(dim));

  const auto domain = r.keyed("domain", 4);
  const double bounds[4] = {grid.x_min(), grid.x_max(), grid.y_min(), grid.y_max()};
  for (int k = 0; k < 4; ++k)
    if (r.to_double(domain[k]) != bounds[k]) r.fail("domain must be -0.5 0.5 -0.5 0.5");

  std::array<double, kQuadPerCell> weights{};
  if (kind == "quad-vector") {
    const long long q = r.to_int(r.keyed("q_per_cell", 1)[0]);
    if (q != kQuadPerCell) r.fail("q_per_cell must be " + std::to_string(kQuadPerCell));
    const auto w = r.keyed("weights", kQuadPerCell);
    for (int k = 0; k < kQuadPerCell; ++k) {
      weights[k] = r.to_double(w[k]);
      if (!(weights[k] > 0.0)) r.fail("quadrature weights must be positive");
    }
  }

  const std::string enc = r.keyed("encoding", 1)[0];
  if (enc != "text" && enc != "binary") r.fail("unknown encoding '" + enc + "'");

  const std::size_t expected = kind == "nodal"
                                   ? static_cast<std::size_t>(grid.n_nodes())
                                   : static_cast<std::size_t>(grid.n_cells()) * kQuadPerCell;
  const long long count = r.to_int(r.keyed("count", 1)[0]);
  if (count < 0 || static_cast<std::size_t>(count) != expected)
    r.fail("count " + std::to_string(count) + " does not match dim " + std::to_string(dim) + " (expect " +
           std::to_string(expected) + ")");
  if (r.next_line() != "data") r.fail("expected 'data'");

  const std::size_t per = kind == "nodal" ? 1 : 2;
  const std::vector<double> flat =
      enc == "text" ? r.text_payload(expected, per) : r.binary_payload(expected * per);

  if (kind == "nodal") {
    NodalField f = NodalField::zeros(grid);
    for (std::size_t k = 0; k < expected; ++k) f.values[static_cast<Eigen::Index>(k)] = flat[k];
    return f;
  }
  QuadVectorField f = QuadVectorField::zeros(grid);
  f.quad_weights = weights;
  for (std::size_t k = 0; k < expected; ++k) f.vectors[k] = {flat[2 * k], flat[2 * k + 1]};
  return f;
}

void write_field(const std::filesystem::path& path, const NodalField& field, Encoding encoding) {
  write_file(path, format_field(field, encoding));
}

void write_field(const std::filesystem::path& path, const QuadVectorField& field, Encoding encoding) {
  write_file(path, format_field(field, encoding));
}

AnyField read_field(const std::filesystem::path& path) { return parse_field(read_file(path), path.string()); }

NodalField read_nodal_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* n = std::get_if<NodalField>(&f)) return std::move(*n);
  throw FieldParseError(path.string(), 2, "expected a nodal field, found quad-vector");
}

QuadVectorField read_quad_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* q = std::get_if<QuadVectorField>(&f)) return std::move(*q);
  throw FieldParseError(path.string(), 2, "expected a quad-vector field, found nodal");
}

int compare_fields(const NodalField& a, const NodalField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("compare_fields: fields live on different grids");
  auto binary = [](const NodalField& f) {
    return ((f.values.array() == 1.0) || (f.values.array() == 2.0)).all();
  };
  if (!binary(a) || !binary(b)) throw std::invalid_argument("compare_fields: fields must take only the values 1 and 2");
  return static_cast<int>((a.values.array() != b.values.array()).count());
}

}  // namespace pcls
