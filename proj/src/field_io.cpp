#include "nlab/field_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nlab/errors.hpp"

namespace nlab {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, p);
}

namespace {

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw IoError(where + ": bad number '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& where) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw IoError(where + ": bad integer '" + s + "'");
  return v;
}

std::map<std::string, std::string> parse_header(const std::string& line, const std::string& where) {
  std::map<std::string, std::string> kv;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError(where + ": expected key=value, got '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& where) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IoError(where + ": header lacks '" + key + "'");
  return it->second;
}

std::string direction_token(Vec2 a) {
  if (a.x1 == 0.0 && a.x2 == 1.0) return "2";
  if (a.x1 == 1.0 && a.x2 == 0.0) return "1";
  return format_double(a.x1) + "," + format_double(a.x2);
}

Vec2 parse_direction(const std::string& tok, const std::string& where) {
  if (tok == "1") return {1.0, 0.0};
  if (tok == "2") return {0.0, 1.0};
  const auto comma = tok.find(',');
  if (comma == std::string::npos) throw IoError(where + ": bad farfield axis '" + tok + "'");
  return {to_double(tok.substr(0, comma), where), to_double(tok.substr(comma + 1), where)};
}

std::vector<double> read_rows(std::istream& in, int nx, int ny, const std::string& where, int& lineno) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  std::string line;
  for (int r = 0; r < ny; ++r) {
    if (!std::getline(in, line)) throw IoError(where + ": expected " + std::to_string(ny) + " value rows");
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    int c = 0;
    while (ls >> tok) {
      out.push_back(to_double(tok, where + ":" + std::to_string(lineno)));
      ++c;
    }
    if (c != nx) throw IoError(where + ":" + std::to_string(lineno) + ": expected " + std::to_string(nx) + " values");
  }
  return out;
}

}  // namespace

void write_field(const std::string& path, const Field& f) {
  const Grid& g = f.grid();
  std::ostringstream os;
  os << "# nlfield v1\n";
  os << "nx=" << g.n() << " ny=" << g.n() << " h=" << format_double(g.h) << " S=" << format_double(g.S)
     << " farfield=";
  const Farfield& ff = f.farfield();
  switch (ff.kind()) {
    case Farfield::Kind::None:
      os << "none";
      break;
    case Farfield::Kind::Constant:
      os << "constant:" << format_double(ff.constant_value());
      break;
    case Farfield::Kind::OneDim:
      if (ff.source().empty()) throw IoError("write_field: one-dimensional farfield has no profile path");
      os << "onedim:" << direction_token(ff.direction()) << ":" << ff.source();
      break;
    case Farfield::Kind::Analytic:
      throw IoError("write_field: analytic farfield rules cannot be serialized");
  }
  os << "\n";
  auto rows = [&](auto&& get) {
    for (int j = -g.m; j <= g.m; ++j) {
      for (int i = -g.m; i <= g.m; ++i) {
        if (i > -g.m) os << ' ';
        os << format_double(get(g.index(i, j)));
      }
      os << '\n';
    }
  };
  rows([&](std::size_t idx) { return f.value(idx); });
  if (f.has_reference()) {
    os << "# deviation\n";
    rows([&](std::size_t idx) { return f.deviations()[idx]; });
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write field file '" + path + "'");
  out << os.str();
  if (!out) throw IoError("write failed for '" + path + "'");
}

Field read_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field file '" + path + "'");
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || line.rfind("# nlfield v1", 0) != 0) throw IoError(path + ":1: missing '# nlfield v1'");
  if (!std::getline(in, line)) throw IoError(path + ":2: missing header");
  ++lineno;
  const auto kv = parse_header(line, path + ":2");
  const int nx = to_int(need(kv, "nx", path), path), ny = to_int(need(kv, "ny", path), path);
  const Grid g = Grid::make(to_double(need(kv, "h", path), path), to_double(need(kv, "S", path), path));
  if (nx != g.n() || ny != g.n())
    throw IoError(path + ": nx/ny inconsistent with h and S (expected " + std::to_string(g.n()) + ")");
  const std::string& ffs = need(kv, "farfield", path);
  Farfield ff;
  if (ffs == "none") {
    ff = Farfield::none();
  } else if (ffs.rfind("constant:", 0) == 0) {
    ff = Farfield::constant(to_double(ffs.substr(9), path));
  } else if (ffs.rfind("onedim:", 0) == 0) {
    const std::string rest = ffs.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw IoError(path + ": bad onedim farfield '" + ffs + "'");
    const Vec2 a = parse_direction(rest.substr(0, colon), path);
    const std::string src = rest.substr(colon + 1);
    fs::path prof(src);
    if (prof.is_relative()) prof = fs::path(path).parent_path() / prof;
    auto profile = std::make_shared<const Profile>(read_profile(prof.string()));
    ff = Farfield::onedim(a, std::move(profile), src);
  } else {
    throw IoError(path + ": unknown farfield rule '" + ffs + "'");
  }
  const std::vector<double> values = read_rows(in, nx, ny, path, lineno);
  auto to_storage = [&](const std::vector<double>& rows) {
    // file rows run over x2, columns over x1, matching the storage order
    return rows;
  };
  Field f = Field::from_values(g, to_storage(values), ff);
  if (std::getline(in, line) && line.rfind("# deviation", 0) == 0) {
    ++lineno;
    const std::vector<double> dev = read_rows(in, nx, ny, path, lineno);
    auto d = f.deviations();
    std::copy(dev.begin(), dev.end(), d.begin());
  }
  return f;
}

void write_profile(const std::string& path, const Profile& p) {
  std::ostringstream os;
  os << "# nlprofile v1\n";
  os << "n=" << p.grid().n() << " h=" << format_double(p.grid().h) << " S=" << format_double(p.grid().S)
     << " left=" << format_double(p.left()) << " right=" << format_double(p.right()) << "\n";
  for (int i = -p.grid().m; i <= p.grid().m; ++i) {
    const Split s = p.node(i);
    os << format_double(s.value()) << ' ' << format_double(s.dev) << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write profile file '" + path + "'");
  out << os.str();
}

Profile read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# nlprofile v1", 0) != 0)
    throw IoError(path + ":1: missing '# nlprofile v1'");
  if (!std::getline(in, line)) throw IoError(path + ":2: missing header");
  const auto kv = parse_header(line, path + ":2");
  const Grid1D g = Grid1D::make(to_double(need(kv, "h", path), path), to_double(need(kv, "S", path), path));
  const int n = to_int(need(kv, "n", path), path);
  if (n != g.n()) throw IoError(path + ": n inconsistent with h and S");
  std::vector<double> dev;
  dev.reserve(static_cast<std::size_t>(n));
  int lineno = 2;
  while (static_cast<int>(dev.size()) < n && std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string v, d;
    if (!(ls >> v >> d)) throw IoError(path + ":" + std::to_string(lineno) + ": expected 'value deviation'");
    dev.push_back(to_double(d, path));
  }
  if (static_cast<int>(dev.size()) != n) throw IoError(path + ": truncated profile");
  return Profile(g, to_double(need(kv, "left", path), path), to_double(need(kv, "right", path), path), std::move(dev));
}

}  // namespace nlab
