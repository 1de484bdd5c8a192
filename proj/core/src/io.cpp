#include "declqg/io.hpp"

#include <fstream>
#include <set>

namespace declqg {

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array of rows");
  const size_t nrows = j.size();
  size_t ncols = 0;
  for (size_t r = 0; r < nrows; ++r) {
    if (!j[r].is_array()) throw ParseError(what + ": row is not an array");
    if (r == 0) {
      ncols = j[r].size();
    } else if (j[r].size() != ncols) {
      throw ParseError(what + ": ragged rows");
    }
  }
  Mat m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
  for (size_t r = 0; r < nrows; ++r) {
    for (size_t c = 0; c < ncols; ++c) {
      if (!j[r][c].is_number()) throw ParseError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return m;
}

namespace {

const Json& field(const Json& j, const char* name, const std::string& ctx) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(ctx + ": missing field '" + name + "'");
  return *it;
}

int int_field(const Json& j, const char* name, const std::string& ctx) {
  const Json& f = field(j, name, ctx);
  if (!f.is_number_integer()) {
    throw ParseError(ctx + ": field '" + name + "' must be an integer");
  }
  return f.get<int>();
}

}  // namespace

Json team_to_json(const TeamProblem& p) {
  Json j;
  j["n"] = p.n;
  j["d_xi"] = p.d_xi;
  j["sigma"] = mat_to_json(p.sigma);
  j["M"] = mat_to_json(p.m);
  Json members = Json::array();
  std::set<std::string> emitted;
  for (const auto& mem : p.members) {
    Json jm;
    jm["d_u"] = mem.d_u;
    jm["N"] = mat_to_json(mem.n_block);
    Json blocks = Json::array();
    for (const auto& id : mem.blocks) {
      Json jb;
      jb["block_id"] = id;
      if (emitted.insert(id).second) {
        const InfoBlock& b = p.block(id);
        jb["H_rows"] = mat_to_json(b.h);
        Json d = Json::object();
        for (const auto& [k, dmat] : b.d) d[std::to_string(k)] = mat_to_json(dmat);
        jb["D_rows"] = d;
      }
      blocks.push_back(std::move(jb));
    }
    jm["info_blocks"] = std::move(blocks);
    members.push_back(std::move(jm));
  }
  j["members"] = std::move(members);
  return j;
}

TeamProblem team_from_json(const Json& j) {
  TeamProblem p;
  p.n = int_field(j, "n", "team problem");
  p.d_xi = int_field(j, "d_xi", "team problem");
  p.sigma = mat_from_json(field(j, "sigma", "team problem"), "sigma");
  p.m = mat_from_json(field(j, "M", "team problem"), "M");
  const Json& members = field(j, "members", "team problem");
  if (!members.is_array()) throw ParseError("members must be an array");
  int index = 0;
  for (const auto& jm : members) {
    ++index;
    const std::string ctx = "member " + std::to_string(index);
    Member mem;
    mem.index = index;
    mem.d_u = int_field(jm, "d_u", ctx);
    mem.n_block = mat_from_json(field(jm, "N", ctx), ctx + " N");
    const Json& blocks = field(jm, "info_blocks", ctx);
    if (!blocks.is_array()) throw ParseError(ctx + ": info_blocks not an array");
    for (const auto& jb : blocks) {
      const Json& idj = field(jb, "block_id", ctx);
      if (!idj.is_string()) throw ParseError(ctx + ": block_id must be a string");
      const std::string id = idj.get<std::string>();
      mem.blocks.push_back(id);
      if (jb.contains("H_rows")) {
        InfoBlock blk;
        blk.id = id;
        blk.h = mat_from_json(jb["H_rows"], "block " + id + " H_rows");
        if (jb.contains("D_rows")) {
          const Json& d = jb["D_rows"];
          if (!d.is_object()) {
            throw ParseError("block " + id + ": D_rows must be an object");
          }
          for (auto it = d.begin(); it != d.end(); ++it) {
            int target = 0;
            try {
              target = std::stoi(it.key());
            } catch (const std::exception&) {
              throw ParseError("block " + id + ": D_rows key '" + it.key() +
                               "' is not a member index");
            }
            blk.d[target] =
                mat_from_json(it.value(), "block " + id + " D_rows");
          }
        }
        auto [existing, inserted] = p.block_registry.try_emplace(id, blk);
        if (!inserted) {
          const InfoBlock& prev = existing->second;
          const bool same_h = prev.h.rows() == blk.h.rows() &&
                              prev.h.cols() == blk.h.cols() &&
                              (prev.h.array() == blk.h.array()).all();
          if (!same_h) {
            throw ParseError("block '" + id +
                             "' redefined with different H rows");
          }
        }
      } else if (!p.block_registry.count(id)) {
        throw ParseError("block '" + id + "' referenced before definition");
      }
    }
    p.members.push_back(std::move(mem));
  }
  return p;
}

Json lqg_to_json(const LqgProblem& p) {
  Json j;
  j["n"] = p.n;
  j["T"] = p.T;
  j["A"] = mat_to_json(p.a);
  Json bb = Json::array(), cb = Json::array(), nb = Json::array();
  for (const auto& b : p.b_blocks) bb.push_back(mat_to_json(b));
  for (const auto& c : p.c_blocks) cb.push_back(mat_to_json(c));
  for (const auto& n : p.n_blocks) nb.push_back(mat_to_json(n));
  j["B_blocks"] = std::move(bb);
  j["C_blocks"] = std::move(cb);
  j["N_blocks"] = std::move(nb);
  j["Sigma_x"] = mat_to_json(p.sigma_x);
  j["Sigma_w"] = mat_to_json(p.sigma_w);
  j["Sigma_v"] = mat_to_json(p.sigma_v);
  j["M"] = mat_to_json(p.m);
  return j;
}

LqgProblem lqg_from_json(const Json& j) {
  LqgProblem p;
  p.n = int_field(j, "n", "lqg problem");
  p.T = int_field(j, "T", "lqg problem");
  p.a = mat_from_json(field(j, "A", "lqg problem"), "A");
  auto blocks = [&](const char* name) {
    const Json& arr = field(j, name, "lqg problem");
    if (!arr.is_array()) throw ParseError(std::string(name) + " must be an array");
    std::vector<Mat> out;
    for (size_t i = 0; i < arr.size(); ++i) {
      out.push_back(mat_from_json(arr[i], std::string(name) + "[" +
                                              std::to_string(i) + "]"));
    }
    return out;
  };
  p.b_blocks = blocks("B_blocks");
  p.c_blocks = blocks("C_blocks");
  p.n_blocks = blocks("N_blocks");
  p.sigma_x = mat_from_json(field(j, "Sigma_x", "lqg problem"), "Sigma_x");
  p.sigma_w = mat_from_json(field(j, "Sigma_w", "lqg problem"), "Sigma_w");
  p.sigma_v = mat_from_json(field(j, "Sigma_v", "lqg problem"), "Sigma_v");
  p.m = mat_from_json(field(j, "M", "lqg problem"), "M");
  return p;
}

Json strategy_to_json(const LinearTeamStrategy& s) {
  Json j;
  j["info_mode"] = s.mode == InfoMode::original ? "original" : "expanded";
  Json coeffs = Json::object();
  for (size_t i = 0; i < s.coeffs.size(); ++i) {
    Json per_member = Json::object();
    for (const auto& [id, k] : s.coeffs[i]) per_member[id] = mat_to_json(k);
    coeffs[std::to_string(i + 1)] = std::move(per_member);
  }
  j["coeffs"] = std::move(coeffs);
  return j;
}

LinearTeamStrategy strategy_from_json(const Json& j, int n_members) {
  LinearTeamStrategy s;
  const Json& mode = field(j, "info_mode", "strategy");
  if (mode == "original") {
    s.mode = InfoMode::original;
  } else if (mode == "expanded") {
    s.mode = InfoMode::expanded;
  } else {
    throw ParseError("strategy: info_mode must be 'original' or 'expanded'");
  }
  s.coeffs.resize(static_cast<size_t>(n_members));
  const Json& coeffs = field(j, "coeffs", "strategy");
  if (!coeffs.is_object()) throw ParseError("strategy: coeffs must be an object");
  for (auto it = coeffs.begin(); it != coeffs.end(); ++it) {
    int member = 0;
    try {
      member = std::stoi(it.key());
    } catch (const std::exception&) {
      throw ParseError("strategy: coeffs key '" + it.key() +
                       "' is not a member index");
    }
    if (member < 1 || member > n_members) {
      throw ParseError("strategy: member index " + it.key() + " out of range");
    }
    if (!it.value().is_object()) {
      throw ParseError("strategy: coefficients of member " + it.key() +
                       " must be an object");
    }
    for (auto bit = it.value().begin(); bit != it.value().end(); ++bit) {
      s.coeffs[static_cast<size_t>(member - 1)][bit.key()] =
          mat_from_json(bit.value(), "strategy coeff " + bit.key());
    }
  }
  return s;
}

std::vector<Mat> pi_from_json(const Json& j) {
  const Json& arr = field(j, "pi", "pi override");
  if (!arr.is_array()) throw ParseError("pi override: 'pi' must be an array");
  std::vector<Mat> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    out.push_back(mat_from_json(arr[i], "pi[" + std::to_string(i) + "]"));
  }
  return out;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError("while parsing '" + path + "': " + e.what());
  }
}

void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace declqg
