#include "natex/demo.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <span>

#include "natex/util.hpp"

namespace natex::demo {

namespace {

const char* const kProjects[] = {"alpha", "beta",  "gamma", "delta", "epsilon", "zeta",
                                 "eta",   "theta", "iota",  "kappa", "sigma",   "omega"};

const char* const kClassNouns[] = {"Buffer",  "Parser", "Cursor",  "Matrix", "Router", "Ledger",
                                   "Sampler", "Planner", "Tracker", "Mixer",  "Scaler", "Counter",
                                   "Filter",  "Packet", "Widget",  "Record"};

const char* const kVars[] = {"value", "count", "total", "index", "limit",  "size",  "offset",
                             "base",  "step",  "item",  "width", "height", "depth", "scale",
                             "acc",   "sum",   "pos",   "len",   "gain",   "span"};

const char* const kVerbs[] = {"compute", "scale", "blend", "merge", "clamp", "pack",
                              "probe",   "shift", "fold",  "rank",  "trim",  "weigh"};

const char* const kNouns[] = {"Total", "Range", "Weight", "Ratio", "Index",
                              "Bounds", "Score", "Span",   "Value", "Count"};

const char* const kConsts[] = {"LIMIT", "SCALE", "WINDOW", "CAP"};

const int kIntLits[] = {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 24, 32, 48, 64, 100, 128, 255};

// exactly representable, so rational evaluation oracles stay simple
const char* const kDblLits[] = {"0.5", "0.25", "0.125", "1.5", "2.0", "4.0", "0.75"};

std::string project_name(int i) {
  if (i < static_cast<int>(std::size(kProjects))) return kProjects[i];
  return "proj" + std::to_string(i);
}

struct Gen {
  util::Rng rng;
  std::set<std::string> methods;
  std::string const_name;

  explicit Gen(uint64_t seed) : rng(seed) {}

  template <size_t N>
  const char* pick(const char* const (&pool)[N]) {
    return pool[rng.below(N)];
  }

  std::string lit() { return std::to_string(kIntLits[rng.below(std::size(kIntLits))]); }
  std::string dlit() { return kDblLits[rng.below(std::size(kDblLits))]; }

  std::string fresh_method() {
    for (;;) {
      std::string name = std::string(pick(kVerbs)) + pick(kNouns);
      if (methods.insert(name).second) return name;
      name += std::to_string(rng.below(90) + 10);
      if (methods.insert(name).second) return name;
    }
  }

  // distinct variable names for one method
  std::vector<std::string> vars(size_t n) {
    std::vector<std::string> pool(std::begin(kVars), std::end(kVars));
    rng.shuffle(pool);
    pool.resize(n);
    return pool;
  }

  // relational bound: literal-heavy, sometimes the file constant or a name
  std::string bound(const std::string& named) {
    uint64_t r = rng.below(10);
    if (r < 6) return lit();
    if (r < 8) return named;
    return const_name;
  }
};

using Lines = std::vector<std::string>;

Lines t_loop_sum(Gen& g) {
  auto v = g.vars(3);
  const std::string &limit = v[0], &total = v[1], &i = v[2];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + limit + ") {",
      "        int " + total + " = 0;",
      "        for (int " + i + " = 0; " + i + " < " + g.bound(limit) + "; " + i + "++) {",
      "            " + total + " = " + total + " + " + i + " * " + g.lit() + ";",
      "        }",
      "        return " + total + ";",
      "    }",
  };
}

Lines t_guard(Gen& g) {
  auto v = g.vars(1);
  const std::string& value = v[0];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + value + ") {",
      "        if (" + value + " < " + g.bound(value) + ") {",
      "            return " + value + " * " + g.lit() + " + " + g.lit() + ";",
      "        }",
      "        return " + value + " / " + std::to_string(2 + static_cast<int>(g.rng.below(4))) +
          ";",
      "    }",
  };
}

Lines t_paren_mix(Gen& g) {
  auto v = g.vars(5);
  const std::string &a = v[0], &b = v[1], &c = v[2], &left = v[3], &right = v[4];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + a + ", int " + b + ", int " + c + ") {",
      "        int " + left + " = (" + a + " * " + b + ") + " + c + ";",
      "        int " + right + " = " + a + " + " + b + " * " + g.lit() + ";",
      "        return " + left + " + " + right + " * " + g.lit() + ";",
      "    }",
  };
}

Lines t_poly(Gen& g) {
  auto v = g.vars(2);
  const std::string &x = v[0], &acc = v[1];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + x + ") {",
      "        int " + acc + " = " + x + " * " + x + " * " + g.lit() + " + " + x + " * " +
          g.lit() + " + " + g.lit() + ";",
      "        return " + acc + ";",
      "    }",
  };
}

Lines t_channels(Gen& g) {
  auto v = g.vars(5);
  const std::string &base = v[0], &r = v[1], &gn = v[2], &b = v[3], &mix = v[4];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + base + ") {",
      "        int " + r + " = " + base + " + " + g.lit() + ";",
      "        int " + gn + " = " + base + " * " + g.lit() + ";",
      "        int " + b + " = " + base + " + " + g.lit() + ";",
      "        int " + mix + " = " + r + " * " + gn + " + " + b + ";",
      "        return " + mix + ";",
      "    }",
  };
}

Lines t_ratio(Gen& g) {
  auto v = g.vars(3);
  const std::string &ratio = v[0], &adjusted = v[1], &scaled = v[2];
  std::string m = g.fresh_method();
  return {
      "    double " + m + "(double " + ratio + ") {",
      "        double " + adjusted + " = " + ratio + " * " + g.dlit() + " + " + g.dlit() + ";",
      "        double " + scaled + " = " + adjusted + " * " + g.dlit() + ";",
      "        return " + scaled + ";",
      "    }",
  };
}

Lines t_long_acc(Gen& g) {
  auto v = g.vars(2);
  const std::string &seed = v[0], &acc = v[1];
  std::string m = g.fresh_method();
  Lines out = {
      "    long " + m + "(long " + seed + ") {",
      "        long " + acc + " = " + seed + ";",
  };
  int rounds = 2 + static_cast<int>(g.rng.below(3));
  for (int i = 0; i < rounds; ++i)
    out.push_back("        " + acc + " = " + acc + " * 31 + " + g.lit() + ";");
  out.push_back("        return " + acc + ";");
  out.push_back("    }");
  return out;
}

Lines t_in_range(Gen& g) {
  auto v = g.vars(2);
  const std::string &pos = v[0], &size = v[1];
  std::string m = g.fresh_method();
  return {
      "    boolean " + m + "(int " + pos + ", int " + size + ") {",
      "        return " + pos + " >= 0 && " + pos + " < " + size + ";",
      "    }",
  };
}

Lines t_tally(Gen& g) {
  auto v = g.vars(2);
  const std::string &items = v[0], &total = v[1];
  std::string m = g.fresh_method();
  Lines out = {
      "    int " + m + "(int " + items + ") {",
      "        int " + total + " = 0;",
  };
  int rounds = 3 + static_cast<int>(g.rng.below(4));
  for (int i = 1; i <= rounds; ++i)
    out.push_back("        " + total + " = " + total + " + " + items + " * " +
                  std::to_string(i) + ";");
  out.push_back("        return " + total + ";");
  out.push_back("    }");
  return out;
}

Lines t_clamp_chain(Gen& g) {
  auto v = g.vars(3);
  const std::string &value = v[0], &limit = v[1], &result = v[2];
  std::string m = g.fresh_method();
  return {
      "    int " + m + "(int " + value + ", int " + limit + ") {",
      "        int " + result + " = " + value + ";",
      "        if (" + result + " > " + limit + ") {",
      "            " + result + " = " + limit + ";",
      "        }",
      "        if (" + result + " < 0) {",
      "            " + result + " = 0;",
      "        }",
      "        return " + result + ";",
      "    }",
  };
}

Lines t_area(Gen& g) {
  auto v = g.vars(4);
  const std::string &width = v[0], &height = v[1], &area = v[2], &ratio = v[3];
  std::string m = g.fresh_method();
  return {
      "    double " + m + "(int " + width + ", int " + height + ") {",
      "        int " + area + " = " + width + " * " + height + ";",
      "        double " + ratio + " = " + area + " * " + g.dlit() + ";",
      "        return " + ratio + " + " + g.dlit() + ";",
      "    }",
  };
}

// two methods: a caller and its helper
std::pair<Lines, Lines> t_helper_pair(Gen& g) {
  auto v = g.vars(2);
  const std::string &input = v[0], &once = v[1];
  std::string m = g.fresh_method();
  std::string h = g.fresh_method();
  Lines caller = {
      "    int " + m + "(int " + input + ") {",
      "        int " + once + " = " + h + "(" + input + " + " + g.lit() + ");",
      "        return " + h + "(" + once + " + " + g.lit() + ");",
      "    }",
  };
  Lines helper = {
      "    int " + h + "(int " + input + ") {",
      "        return " + input + " * " + g.lit() + " + " + g.lit() + ";",
      "    }",
  };
  return {caller, helper};
}

std::string render_file(const std::string& project, const std::string& cls, Gen& g,
                        int methods_per_file) {
  g.const_name = g.pick(kConsts);
  Lines body;
  int slots = 0;
  int ti = 0;
  while (slots < methods_per_file) {
    Lines method;
    // the first three methods cover loops, paren styles and shuffle fodder;
    // the rest draw from the full idiom pool
    int t = ti < 3 ? ti : static_cast<int>(g.rng.below(12));
    ++ti;
    switch (t) {
      case 0: method = t_loop_sum(g); break;
      case 1: method = t_paren_mix(g); break;
      case 2: method = t_channels(g); break;
      case 3: method = t_guard(g); break;
      case 4: method = t_poly(g); break;
      case 5: method = t_ratio(g); break;
      case 6: method = t_long_acc(g); break;
      case 7: method = t_in_range(g); break;
      case 8: method = t_tally(g); break;
      case 9: method = t_clamp_chain(g); break;
      case 10: method = t_area(g); break;
      default: {
        if (slots + 2 > methods_per_file) {
          method = t_guard(g);
          break;
        }
        auto [caller, helper] = t_helper_pair(g);
        body.insert(body.end(), caller.begin(), caller.end());
        body.push_back("");
        body.insert(body.end(), helper.begin(), helper.end());
        body.push_back("");
        slots += 2;
        continue;
      }
    }
    body.insert(body.end(), method.begin(), method.end());
    body.push_back("");
    ++slots;
  }

  std::string out = "package demo." + project + ";\n\npublic class " + cls + " {\n\n";
  out += "    static final int " + g.const_name + " = " + g.lit() + ";\n\n";
  for (const auto& line : body) {
    out += line;
    out += '\n';
  }
  out += "}\n";
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> generate(const DemoSpec& spec) {
  if (spec.projects < 1 || spec.files_per_project < 1 || spec.methods_per_file < 1)
    throw ConfigError("demo: projects, files and methods must be positive");
  std::vector<std::pair<std::string, std::string>> out;
  for (int p = 0; p < spec.projects; ++p) {
    std::string project = project_name(p);
    for (int f = 0; f < spec.files_per_project; ++f) {
      std::string cls =
          std::string(kClassNouns[f % std::size(kClassNouns)]) +
          std::to_string(f / std::size(kClassNouns));
      uint64_t fseed = util::derive_seed(spec.seed, "demo-file",
                                         static_cast<uint64_t>(p) * 100000 +
                                             static_cast<uint64_t>(f));
      Gen g(fseed);
      out.emplace_back(project + "/" + cls + ".java",
                       render_file(project, cls, g, spec.methods_per_file));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_corpus(const std::string& dir, const DemoSpec& spec) {
  namespace fs = std::filesystem;
  auto files = generate(spec);
  for (const auto& [rel, content] : files) {
    fs::path p = fs::path(dir) / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw DataError("demo: cannot create " + p.parent_path().string());
    util::write_file(p.string(), content);
  }
}

std::vector<std::string> project_dirs(const std::string& dir, const DemoSpec& spec) {
  std::vector<std::string> out;
  for (int p = 0; p < spec.projects; ++p)
    out.push_back((std::filesystem::path(dir) / project_name(p)).string());
  return out;
}

}  // namespace natex::demo
