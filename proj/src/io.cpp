#include "idarr/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "idarr/errors.hpp"

namespace idarr::io {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr const char* kVectorMagic = "IDARR-VECTOR";
constexpr const char* kMatrixMagic = "IDARR-MATRIX";

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Skips whitespace and '#' comments between PGM header tokens.
std::string pgm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

long parse_positive(const std::string& token, const fs::path& path) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used == token.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw IoError("malformed header in " + path.string());
}

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      auto bits = std::bit_cast<std::uint64_t>(data[i]);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      out.write(bytes, 8);
    }
  }
}

void read_doubles(std::istream& in, double* data, std::size_t count,
                  const fs::path& path) {
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("truncated payload in " + path.string());
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
}

std::string slurp(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool starts_with(const std::string& text, const char* magic) {
  return text.rfind(magic, 0) == 0;
}

std::vector<std::vector<double>> parse_text_rows(const std::string& text,
                                                const fs::path& path) {
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw IoError("non-numeric token '" + tok + "' in " + path.string());
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Matrix read_pgm(const fs::path& path) {
  auto in = open_in(path);
  if (pgm_token(in) != "P5") throw IoError("not a binary PGM (P5): " + path.string());
  const long width = parse_positive(pgm_token(in), path);
  const long height = parse_positive(pgm_token(in), path);
  const long maxval = parse_positive(pgm_token(in), path);
  if (maxval > 255) throw IoError("only 8-bit PGM is supported: " + path.string());
  std::vector<unsigned char> pixels(static_cast<std::size_t>(width * height));
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != pixels.size()) {
    throw IoError("truncated PGM: " + path.string());
  }
  Matrix img(height, width);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      img(r, c) = static_cast<double>(pixels[static_cast<std::size_t>(r * width + c)]) /
                  static_cast<double>(maxval);
    }
  }
  return img;
}

void write_pgm(const fs::path& path, const Matrix& image) {
  auto out = open_out(path);
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  std::vector<unsigned char> pixels;
  pixels.reserve(static_cast<std::size_t>(image.size()));
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      pixels.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

static Matrix text_matrix(const std::string& text, const fs::path& path) {
  const auto rows = parse_text_rows(text, path);
  if (rows.empty()) throw IoError("empty matrix file: " + path.string());
  Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      throw IoError("ragged rows in " + path.string());
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return a;
}

Matrix read_text_matrix(const fs::path& path) { return text_matrix(slurp(path), path); }

void write_vector(const fs::path& path, const Vector& v) {
  auto out = open_out(path);
  out << kVectorMagic << " 1 " << v.size() << " float64-le\n";
  write_doubles(out, v.data(), static_cast<std::size_t>(v.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Vector read_vector(const fs::path& path) {
  const std::string text = slurp(path);
  if (!starts_with(text, kVectorMagic)) {
    const auto rows = parse_text_rows(text, path);
    std::vector<double> all;
    for (const auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    if (all.empty()) throw IoError("empty vector file: " + path.string());
    return Eigen::Map<const Vector>(all.data(), static_cast<Eigen::Index>(all.size()));
  }
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic, fmt;
  int version = 0;
  long long n = -1;
  hs >> magic >> version >> n >> fmt;
  if (version != 1 || n < 0 || fmt != "float64-le") {
    throw IoError("bad vector header in " + path.string());
  }
  Vector v(n);
  read_doubles(in, v.data(), static_cast<std::size_t>(n), path);
  return v;
}

void write_matrix(const fs::path& path, const Matrix& a) {
  auto out = open_out(path);
  out << kMatrixMagic << " 1 " << a.rows() << ' ' << a.cols() << " float64-le row-major\n";
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a;
  write_doubles(out, rm.data(), static_cast<std::size_t>(rm.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix(const fs::path& path) {
  const std::string text = slurp(path);
  if (!starts_with(text, kMatrixMagic)) return text_matrix(text, path);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic, fmt, order;
  int version = 0;
  long long rows = -1, cols = -1;
  hs >> magic >> version >> rows >> cols >> fmt >> order;
  if (version != 1 || rows < 0 || cols < 0 || fmt != "float64-le" || order != "row-major") {
    throw IoError("bad matrix header in " + path.string());
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  read_doubles(in, rm.data(), static_cast<std::size_t>(rm.size()), path);
  return rm;
}

void save_problem(const fs::path& dir, const TestProblem& problem) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  pt::ptree op;
  if (const auto* psf = dynamic_cast<const PsfConvolutionMap*>(problem.map.get())) {
    op.put("kind", "psf");
    op.put("side", psf->image_side());
    op.put("file", "psf.mat");
    write_matrix(dir / "psf.mat", psf->psf());
  } else if (const auto* diag = dynamic_cast<const DiagonalMap*>(problem.map.get())) {
    op.put("kind", "diagonal");
    op.put("file", "diagonal.vec");
    write_vector(dir / "diagonal.vec", diag->diagonal());
  } else {
    op.put("kind", "dense");
    op.put("file", "operator.mat");
    const Matrix* dense = problem.map->dense();
    write_matrix(dir / "operator.mat", dense ? *dense : problem.map->to_dense());
  }
  pt::write_ini((dir / "operator.txt").string(), op);

  pt::ptree meta;
  meta.put("sigma", format_double(problem.sigma));
  meta.put("dt", format_double(problem.dt));
  meta.put("nsr", format_double(problem.nsr));
  meta.put("seed", problem.seed);
  pt::write_ini((dir / "problem.txt").string(), meta);

  write_vector(dir / "b.vec", problem.b);
  write_vector(dir / "b_clean.vec", problem.b_clean);
  write_vector(dir / "x_true.vec", problem.x_true);
  write_vector(dir / "weights.vec", problem.geom.weights());
}

std::shared_ptr<const LinearMap> load_operator(const fs::path& dir) {
  pt::ptree op;
  try {
    pt::read_ini((dir / "operator.txt").string(), op);
  } catch (const pt::ptree_error& e) {
    throw IoError(std::string("operator descriptor: ") + e.what());
  }
  const auto kind = op.get<std::string>("kind", "");
  const auto file = dir / op.get<std::string>("file", "");
  if (kind == "dense") return std::make_shared<const DenseMap>(read_matrix(file));
  if (kind == "diagonal") return std::make_shared<const DiagonalMap>(read_vector(file));
  if (kind == "psf") {
    const auto side = op.get_optional<long>("side");
    if (!side || *side < 1) throw IoError("psf operator needs side=N");
    return std::make_shared<const PsfConvolutionMap>(*side, read_matrix(file));
  }
  throw IoError("unknown operator kind '" + kind + "' in " + dir.string());
}

TestProblem load_problem(const fs::path& dir) {
  auto map = load_operator(dir);
  pt::ptree meta;
  try {
    pt::read_ini((dir / "problem.txt").string(), meta);
  } catch (const pt::ptree_error& e) {
    throw IoError(std::string("problem descriptor: ") + e.what());
  }
  const Vector b = read_vector(dir / "b.vec");
  if (b.size() != map->rows()) throw DimensionError("b.vec length differs from operator rows");
  auto geom = fs::exists(dir / "weights.vec")
                  ? RkhsGeometry::with_weights(map, read_vector(dir / "weights.vec"))
                  : RkhsGeometry::from_exploration(map);
  Vector x_true = fs::exists(dir / "x_true.vec") ? read_vector(dir / "x_true.vec")
                                                  : Vector::Zero(map->cols());
  Vector b_clean = fs::exists(dir / "b_clean.vec") ? read_vector(dir / "b_clean.vec") : b;
  TestProblem p{map, std::move(geom), std::move(x_true), std::move(b_clean), b};
  p.sigma = meta.get<double>("sigma", 0.0);
  p.dt = meta.get<double>("dt", 0.0);
  p.nsr = meta.get<double>("nsr", 0.0);
  p.seed = meta.get<std::uint64_t>("seed", 0);
  return p;
}

}  // namespace idarr::io
