#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include <gtest/gtest.h>

#include "idarr/errors.hpp"
#include "idarr/io.hpp"
#include "idarr/oracles.hpp"
#include "idarr/problems.hpp"

using namespace idarr;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("idarr_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_text(const fs::path& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    out << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(IoTest, VectorRoundTripIsBitExact) {
  Vector v = oracle::random_matrix(37, 1, 1).col(0);
  v(3) = -0.0;
  v(4) = 1e-310;
  io::write_vector(dir_ / "v.vec", v);
  const Vector back = io::read_vector(dir_ / "v.vec");
  ASSERT_EQ(back.size(), v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    EXPECT_EQ(std::memcmp(&back(i), &v(i), sizeof(double)), 0) << i;
  }
}

TEST_F(IoTest, VectorHeaderFormat) {
  io::write_vector(dir_ / "v.vec", Vector::Ones(3));
  std::ifstream in(dir_ / "v.vec", std::ios::binary);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "IDARR-VECTOR 1 3 float64-le");
  EXPECT_EQ(fs::file_size(dir_ / "v.vec"), line.size() + 1 + 3 * sizeof(double));
}

TEST_F(IoTest, TextVector) {
  write_text("v.txt", "1 2.5\n-3e-2\n");
  const Vector v = io::read_vector(dir_ / "v.txt");
  ASSERT_EQ(v.size(), 3);
  EXPECT_DOUBLE_EQ(v(1), 2.5);
  EXPECT_DOUBLE_EQ(v(2), -0.03);
}

TEST_F(IoTest, MalformedVectors) {
  write_text("bad.txt", "1 2 x\n");
  EXPECT_THROW(io::read_vector(dir_ / "bad.txt"), IoError);
  write_text("empty.txt", "");
  EXPECT_THROW(io::read_vector(dir_ / "empty.txt"), IoError);
  write_text("short.vec", "IDARR-VECTOR 1 4 float64-le\nabc");
  EXPECT_THROW(io::read_vector(dir_ / "short.vec"), IoError);
  EXPECT_THROW(io::read_vector(dir_ / "missing.vec"), IoError);
}

TEST_F(IoTest, MatrixRoundTrip) {
  const Matrix a = oracle::random_matrix(7, 4, 2);
  io::write_matrix(dir_ / "a.mat", a);
  EXPECT_EQ(io::read_matrix(dir_ / "a.mat"), a);
}

TEST_F(IoTest, TextMatrix) {
  write_text("a.txt", "1 2 3\n4 5 6\n\n");
  const Matrix a = io::read_text_matrix(dir_ / "a.txt");
  ASSERT_EQ(a.rows(), 2);
  ASSERT_EQ(a.cols(), 3);
  EXPECT_EQ(a(1, 2), 6.0);
  EXPECT_EQ(io::read_matrix(dir_ / "a.txt"), a);
  write_text("ragged.txt", "1 2 3\n4 5\n");
  EXPECT_THROW(io::read_text_matrix(dir_ / "ragged.txt"), IoError);
}

TEST_F(IoTest, PgmRoundTripQuantizes) {
  Matrix img(3, 4);
  img << 0, 0.5, 1, 2, -1, 0.25, 0.75, 0.1, 0.999, 0.001, 0.3, 0.6;
  io::write_pgm(dir_ / "i.pgm", img);
  const Matrix back = io::read_pgm(dir_ / "i.pgm");
  ASSERT_EQ(back.rows(), 3);
  ASSERT_EQ(back.cols(), 4);
  const Matrix clamped = img.cwiseMax(0.0).cwiseMin(1.0);
  EXPECT_LE((back - clamped).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  EXPECT_EQ(back(0, 3), 1.0);
  EXPECT_EQ(back(1, 0), 0.0);
}

TEST_F(IoTest, PgmHeaderWithComments) {
  std::string data = "P5\n# comment\n2 1\n255\n";
  data.push_back(static_cast<char>(0));
  data.push_back(static_cast<char>(255));
  write_text("c.pgm", data);
  const Matrix img = io::read_pgm(dir_ / "c.pgm");
  EXPECT_EQ(img(0, 0), 0.0);
  EXPECT_EQ(img(0, 1), 1.0);
}

TEST_F(IoTest, PgmRejectsOtherFormats) {
  write_text("p2.pgm", "P2\n2 1\n255\n0 255\n");
  EXPECT_THROW(io::read_pgm(dir_ / "p2.pgm"), IoError);
  write_text("wide.pgm", "P5\n1 1\n65535\n\x01\x02");
  EXPECT_THROW(io::read_pgm(dir_ / "wide.pgm"), IoError);
  write_text("trunc.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(io::read_pgm(dir_ / "trunc.pgm"), IoError);
}

TEST_F(IoTest, DenseProblemRoundTrip) {
  const FredholmSetup f = make_fredholm(KernelId::PolyDecay, 30, 8);
  const TestProblem p =
      add_noise(make_problem(f.map, f.geom, true_solution(TruthKind::OutFsoi, f), f.dt), 0.25, 4);
  io::save_problem(dir_ / "prob", p);
  const TestProblem q = io::load_problem(dir_ / "prob");
  EXPECT_EQ(q.b, p.b);
  EXPECT_EQ(q.b_clean, p.b_clean);
  EXPECT_EQ(q.x_true, p.x_true);
  EXPECT_EQ(q.geom.weights(), p.geom.weights());
  EXPECT_EQ(q.map->to_dense(), p.map->to_dense());
  EXPECT_EQ(q.nsr, p.nsr);
  EXPECT_EQ(q.seed, p.seed);
  EXPECT_EQ(q.sigma, p.sigma);
  EXPECT_EQ(q.dt, p.dt);
}

TEST_F(IoTest, PsfProblemRoundTrip) {
  const TestProblem p = make_deblur(phantom_image(12), gaussian_psf(1.0), 0.01, 2);
  io::save_problem(dir_ / "blur", p);
  const auto op = io::load_operator(dir_ / "blur");
  const Vector v = oracle::random_matrix(144, 1, 3).col(0);
  EXPECT_EQ(op->apply(v), p.map->apply(v));
  EXPECT_EQ(io::load_problem(dir_ / "blur").b, p.b);
}

TEST_F(IoTest, DiagonalOperatorRoundTrip) {
  Vector d(3);
  d << 1, 2, 3;
  auto map = std::make_shared<DiagonalMap>(d);
  const TestProblem p =
      make_problem(map, RkhsGeometry::from_exploration(map), Vector::Ones(3), 1.0);
  io::save_problem(dir_ / "diag", p);
  EXPECT_EQ(io::load_operator(dir_ / "diag")->to_dense(), map->to_dense());
}

TEST_F(IoTest, BadProblemDirectories) {
  EXPECT_THROW(io::load_problem(dir_ / "absent"), IoError);
  fs::create_directories(dir_ / "odd");
  write_text("odd/operator.txt", "kind=sparse\n");
  EXPECT_THROW(io::load_operator(dir_ / "odd"), IoError);
}
