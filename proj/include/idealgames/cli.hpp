#pragma once

// Command-line front end. run_cli() is the whole program; tools/ wraps it
// in main() and the tests drive it directly.
//
// Exit codes: 0 ok, 2 result dominated by Undecided, 1 error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "idealgames/convergence.hpp"
#include "idealgames/error.hpp"
#include "idealgames/games.hpp"
#include "idealgames/ideals.hpp"
#include "idealgames/mc.hpp"
#include "idealgames/seqspace.hpp"
#include "idealgames/series.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUndecided = 2;

namespace cli {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(Errc::InvalidArgument, "write to '" + path + "' failed");
}

struct IdealOptions {
  std::string name = "density0";
  std::optional<double> theta_low, theta_high, b_sum;
  std::optional<Index> c_fin, c_odd;

  void attach(CLI::App* app) {
    app->add_option("--ideal", name, "fin | density0 | summable | fubini-odd")->required();
    app->add_option("--theta-low", theta_low, "density threshold for InIdeal");
    app->add_option("--theta-high", theta_high, "density threshold for NotInIdeal");
    app->add_option("--b-sum", b_sum, "reciprocal-sum bound");
    app->add_option("--c-fin", c_fin, "count threshold for Fin and cluster hits");
    app->add_option("--c-odd", c_odd, "odd-count threshold");
  }

  IdealDescriptor make() const {
    IdealDescriptor d = parse_ideal(name);
    if (theta_low) d.params.theta_low = *theta_low;
    if (theta_high) d.params.theta_high = *theta_high;
    if (b_sum) d.params.b_sum = *b_sum;
    if (c_fin) d.params.c_fin = *c_fin;
    if (c_odd) d.params.c_odd = *c_odd;
    d.params.validate();
    return d;
  }
};

// stem@PATH reads either a transcript (its output stem) or whitespace/comma
// separated integers; anything else is a subsequence literal.
inline Subseq load_subseq(const std::string& text) {
  if (text.rfind("stem@", 0) != 0) return parse_subseq(text);
  const std::string body = read_file(text.substr(5));
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '{') return Transcript::from_jsonl(body).sigma();
  std::vector<Index> stem;
  std::string tok;
  for (char ch : body + " ") {
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      tok += ch;
    } else if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) {
        const Nat v = parse_nat(tok);
        if (!fits_index(v)) throw Error(Errc::Range, "stem value exceeds 64 bits");
        stem.push_back(static_cast<Index>(v));
        tok.clear();
      }
    } else {
      throw Error(Errc::Parse, std::string("unexpected character '") + ch + "' in stem file");
    }
  }
  return Subseq::stem_only(std::move(stem));
}

inline Perm load_perm(const std::string& text) {
  if (text.rfind("stem@", 0) != 0) return parse_perm(text);
  return Transcript::from_jsonl(read_file(text.substr(5))).pi();
}

struct Output {
  std::ostream& out;
  std::string path;

  void report(const nlohmann::json& j) const {
    const std::string text = j.dump(2) + "\n";
    if (!path.empty()) write_file(path, text);
    out << text;
  }
};

// Converts {"command": c, "key": v, ...} into argv for the same parser.
inline std::vector<std::string> config_to_args(const nlohmann::json& cfg) {
  if (!cfg.is_object() || !cfg.contains("command") || !cfg.at("command").is_string())
    throw Error(Errc::Parse, "config must be an object with a string \"command\"");
  std::vector<std::string> args = {"idealgames", cfg.at("command").get<std::string>()};
  if (args[1] == "run") throw Error(Errc::InvalidArgument, "a config cannot run another config");
  auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
    throw Error(Errc::Parse, "config values must be strings, numbers, booleans or arrays of those");
  };
  for (const auto& [key, v] : cfg.items()) {
    if (key == "command") continue;
    const std::string flag = key.size() == 1 ? "-" + key : "--" + key;
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& e : v) {
        args.push_back(flag);
        args.push_back(scalar(e));
      }
    } else {
      args.push_back(flag);
      args.push_back(scalar(v));
    }
  }
  return args;
}

inline int cluster_exit(const ClusterResult& r) {
  for (const auto& f : r.flags)
    if (f == "UndecidedDominates") return kExitUndecided;
  return kExitOk;
}

}  // namespace cli

inline int run_cli(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

namespace cli {

inline int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ideal convergence, Laflamme games and generic subsequences"};
  app.require_subcommand(1);
  int code = kExitOk;

  // classify
  auto* classify = app.add_subcommand("classify", "membership of a set in an ideal");
  IdealOptions c_ideal;
  std::string c_set, c_out;
  Index c_N = 10'000;
  c_ideal.attach(classify);
  classify->add_option("--set", c_set, "set literal, e.g. ap(2,2)")->required();
  classify->add_option("-N,--horizon", c_N, "horizon when the set is outside the symbolic fragment");
  classify->add_option("--out", c_out, "also write the report here");
  classify->callback([&] {
    const Verdict v = classify_auto(c_ideal.make(), parse_set(c_set), c_N);
    Output{out, c_out}.report({{"set", c_set}, {"ideal", c_ideal.name}, {"verdict", v.to_json()}});
    if (v.undecided()) code = kExitUndecided;
  });

  // cluster / limit
  struct PointOpts {
    IdealOptions ideal;
    std::string seq, out;
    Index N = 10'000;
    double eps = 0.05;
  };
  PointOpts p_cluster, p_limit;
  auto add_points = [&](const char* name, const char* help, PointOpts& o) {
    auto* sub = app.add_subcommand(name, help);
    o.ideal.attach(sub);
    sub->add_option("--seq", o.seq, "sequence literal")->required();
    sub->add_option("-N,--horizon", o.N, "horizon");
    sub->add_option("--eps", o.eps, "resolution");
    sub->add_option("--out", o.out, "also write the report here");
    return sub;
  };
  add_points("cluster", "ideal cluster points and accumulation points", p_cluster)->callback([&] {
    const auto I = p_cluster.ideal.make();
    ClusterAnalysis a(parse_sequence(p_cluster.seq), p_cluster.N, p_cluster.eps, I.params.c_fin);
    const ClusterResult g = a.gamma(I);
    Output{out, p_cluster.out}.report({{"seq", p_cluster.seq}, {"ideal", I.name()}, {"N", p_cluster.N},
                                       {"eps", p_cluster.eps}, {"gamma", g.to_json()}, {"acc", a.acc().to_json()}});
    code = cluster_exit(g);
  });
  add_points("limit", "ideal limit points", p_limit)->callback([&] {
    const auto I = p_limit.ideal.make();
    const ClusterResult l = lambda_hat(parse_sequence(p_limit.seq), I, p_limit.N, p_limit.eps);
    Output{out, p_limit.out}.report({{"seq", p_limit.seq}, {"ideal", I.name()}, {"N", p_limit.N},
                                     {"eps", p_limit.eps}, {"lambda", l.to_json()}});
    code = cluster_exit(l);
  });

  // preserve
  auto* preserve = app.add_subcommand("preserve", "does a subsequence or permutation keep the point set");
  PointOpts p_pres;
  std::string pres_kind = "gamma", pres_sigma, pres_perm;
  p_pres.ideal.attach(preserve);
  preserve->add_option("--seq", p_pres.seq, "sequence literal")->required();
  preserve->add_option("--kind", pres_kind, "gamma | lambda");
  auto* o_sigma = preserve->add_option("--sigma", pres_sigma, "subsequence literal or stem@FILE");
  auto* o_perm = preserve->add_option("--perm", pres_perm, "permutation literal or stem@FILE");
  o_sigma->excludes(o_perm);
  preserve->add_option("-N,--horizon", p_pres.N, "horizon");
  preserve->add_option("--eps", p_pres.eps, "resolution");
  preserve->add_option("--out", p_pres.out, "also write the report here");
  preserve->callback([&] {
    if (pres_sigma.empty() == pres_perm.empty()) throw Error(Errc::InvalidArgument, "give exactly one of --sigma, --perm");
    const auto I = p_pres.ideal.make();
    const Sequence x = parse_sequence(p_pres.seq);
    const PointKind kind = parse_point_kind(pres_kind);
    const PreserveReport r = pres_sigma.empty() ? preserves(kind, x, load_perm(pres_perm), I, p_pres.N, p_pres.eps)
                                                : preserves(kind, x, load_subseq(pres_sigma), I, p_pres.N, p_pres.eps);
    nlohmann::json j = r.to_json();
    j["seq"] = p_pres.seq;
    j["ideal"] = I.name();
    j["transform"] = pres_sigma.empty() ? pres_perm : pres_sigma;
    Output{out, p_pres.out}.report(j);
    if (r.outcome == Preservation::Undecided) code = kExitUndecided;
  });

  // game
  auto* game = app.add_subcommand("game", "play the Laflamme game");
  IdealOptions g_ideal;
  std::string g_one = "exp", g_two = "talagrand", g_out;
  Index g_rounds = 50;
  g_ideal.attach(game);
  game->add_option("--strat-i", g_one, "linear[:step] | exp | random-jump:seed[:max] | schedule:c1,c2,...");
  game->add_option("--strat-ii", g_two, "talagrand | empty");
  game->add_option("--rounds", g_rounds, "number of rounds (>= 1)");
  game->add_option("--out", g_out, "transcript file (JSON lines)");
  game->callback([&] {
    const auto I = g_ideal.make();
    PlayerII two = g_two == "talagrand" ? PlayerII::talagrand(talagrand_witness(I))
                   : g_two == "empty"   ? PlayerII::empty()
                                        : throw Error(Errc::Parse, "unknown Player II strategy '" + g_two + "'");
    const Transcript t = play_laflamme(I, PlayerI::parse(g_one), two, g_rounds);
    if (!g_out.empty()) write_file(g_out, t.to_jsonl());
    out << nlohmann::json{{"verdict", t.verdict.to_json()}, {"rounds", t.rounds.size()}, {"out", g_out}}.dump(2) << "\n";
    if (t.verdict.undecided()) code = kExitUndecided;
  });

  // generic
  auto* generic = app.add_subcommand("generic", "build a generic subsequence or permutation");
  IdealOptions b_ideal;
  std::string b_space = "sigma", b_mode = "witness", b_seq, b_one = "linear:10", b_out;
  std::vector<double> b_etas;
  Index b_mmax = 3, b_rounds = 12;
  double b_center = 0, b_radius = 0.5;
  std::vector<std::string> b_oracles;
  b_ideal.attach(generic);
  generic->add_option("--space", b_space, "sigma | pi");
  generic->add_option("--mode", b_mode, "witness | game | series (series: sigma only)");
  generic->add_option("--seq", b_seq, "sequence literal")->required();
  generic->add_option("--rounds", b_rounds, "number of rounds");
  generic->add_option("--eta", b_etas, "witness mode: target values (default: special values of the sequence)");
  generic->add_option("--m-max", b_mmax, "witness mode: largest m in the radius 1/m");
  generic->add_option("--center", b_center, "game mode: centre of U");
  generic->add_option("--radius", b_radius, "game mode: radius of U");
  generic->add_option("--strat-i", b_one, "game and series modes: Player I strategy");
  generic->add_option("--oracle", b_oracles, "game and series modes: oracle, repeat to cycle");
  generic->add_option("--out", b_out, "transcript file (JSON lines)");
  generic->callback([&] {
    const auto I = b_ideal.make();
    const Sequence x = parse_sequence(b_seq);
    const Space space = parse_space(b_space);
    std::vector<Oracle> oracles;
    for (const auto& o : b_oracles) oracles.push_back(Oracle::parse(o));
    if (oracles.empty()) oracles.push_back(b_mode == "series" ? Oracle::force() : Oracle::trivial());
    Transcript t;
    if (b_mode == "witness") {
      WitnessPlan plan{b_etas.empty() ? x.special_values() : b_etas, b_mmax};
      t = space == Space::Sigma ? build_generic_sigma_witness(x, I, plan, b_rounds)
                                : build_generic_pi_witness(x, I, plan, b_rounds);
    } else if (b_mode == "game") {
      if (!(b_radius > 0)) throw Error(Errc::Range, "radius must be positive");
      GamePlan plan{Ball{b_center, b_radius}, PlayerI::parse(b_one), oracles};
      t = space == Space::Sigma ? build_generic_sigma_game(x, I, plan, b_rounds)
                                : build_generic_pi_game(x, I, plan, b_rounds);
    } else if (b_mode == "series") {
      if (space != Space::Sigma) throw Error(Errc::SpaceMismatch, "series steering builds subsequences only");
      t = steer_series_sigma(x, I, PlayerI::parse(b_one), oracles, b_rounds);
    } else {
      throw Error(Errc::Parse, "unknown mode '" + b_mode + "' (witness, game, series)");
    }
    if (!b_out.empty()) write_file(b_out, t.to_jsonl());
    out << nlohmann::json{{"verdict", t.verdict.to_json()}, {"rounds", t.rounds.size()},
                          {"stem_length", t.stem.size()}, {"out", b_out}}
               .dump(2)
        << "\n";
    if (t.verdict.undecided()) code = kExitUndecided;
  });

  // witness
  auto* witness = app.add_subcommand("witness", "soundness of the interval witness of an ideal");
  IdealOptions w_ideal;
  Index w_trials = 100, w_N = 100'000;
  std::uint64_t w_seed = 0;
  std::string w_out;
  w_ideal.attach(witness);
  witness->add_option("--trials", w_trials, "number of random unions");
  witness->add_option("-N,--horizon", w_N, "horizon");
  witness->add_option("--seed", w_seed, "seed")->required();
  witness->add_option("--out", w_out, "also write the report here");
  witness->callback([&] {
    const auto I = w_ideal.make();
    const SoundnessReport r = witness_soundness_report(I, talagrand_witness(I), w_trials, w_seed, w_N);
    Output{out, w_out}.report(r.to_json());
    if (r.not_in < r.trials) code = kExitUndecided;
  });

  // series
  auto* series = app.add_subcommand("series", "partial sums bounded modulo an ideal along a subsequence");
  IdealOptions s_ideal;
  std::string s_seq, s_sigma = "identity", s_out;
  Index s_N = 10'000, s_kmax = kDefaultKMax;
  s_ideal.attach(series);
  series->add_option("--seq", s_seq, "sequence literal")->required();
  series->add_option("--sigma", s_sigma, "subsequence literal or stem@FILE");
  series->add_option("-N,--horizon", s_N, "horizon (default: 10000, capped at the stem length)");
  series->add_option("--k-max", s_kmax, "largest bound K tried");
  series->add_option("--out", s_out, "also write the report here");
  series->callback([&] {
    const auto I = s_ideal.make();
    const Subseq sigma = load_subseq(s_sigma);
    Index N = s_N;
    if (auto len = sigma.defined_length()) N = std::min(N, *len);
    const SigmaSxReport r = in_sigma_Sx(sigma, parse_sequence(s_seq), I, N, s_kmax);
    nlohmann::json j = r.to_json();
    j["seq"] = s_seq;
    j["ideal"] = I.name();
    j["sigma"] = s_sigma;
    Output{out, s_out}.report(j);
    if (r.bounded.verdict.undecided()) code = kExitUndecided;
  });

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo preservation fractions and cylinder masses");
  IdealOptions m_ideal;
  std::string m_seq, m_kind = "gamma", m_out, m_csv;
  std::vector<Index> m_cylinder;
  std::uint64_t m_samples = 1000, m_seed = 0, m_batch = kDefaultBatch;
  Index m_N = 10'000;
  double m_eps = 0.05;
  mc->add_option("--ideal", m_ideal.name, "fin | density0 | summable | fubini-odd");
  mc->add_option("--seq", m_seq, "sequence literal");
  mc->add_option("--kind", m_kind, "gamma | lambda");
  mc->add_option("--cylinder", m_cylinder, "estimate the mass of this stem instead")->delimiter(',');
  mc->add_option("--samples", m_samples, "number of samples");
  mc->add_option("-N,--horizon", m_N, "horizon");
  mc->add_option("--eps", m_eps, "resolution");
  mc->add_option("--seed", m_seed, "master seed")->required();
  mc->add_option("--batch", m_batch, "samples per batch (CSV rows)");
  mc->add_option("--out", m_out, "also write the report here");
  mc->add_option("--csv", m_csv, "per-batch CSV");
  mc->callback([&] {
    McReport r;
    if (!m_cylinder.empty()) {
      r = dyadic_cylinder_mass(m_cylinder, m_samples, m_seed, m_batch);
    } else {
      if (m_seq.empty()) throw Error(Errc::InvalidArgument, "mc needs --seq or --cylinder");
      r = estimate_preservation(parse_sequence(m_seq), m_ideal.make(), parse_point_kind(m_kind), m_samples, m_N,
                                m_eps, m_seed, m_batch);
    }
    Output{out, m_out}.report(r.to_json());
    if (!m_csv.empty()) write_file(m_csv, r.to_csv());
    if (static_cast<double>(r.undecided) > kUndecidedDominates * static_cast<double>(r.samples)) code = kExitUndecided;
  });

  // verify
  auto* verify = app.add_subcommand("verify", "replay a transcript and check its invariants");
  std::string v_path;
  verify->add_option("transcript", v_path, "transcript file")->required();
  verify->callback([&] {
    const auto issues = verify_transcript(Transcript::from_jsonl(read_file(v_path)));
    out << nlohmann::json{{"transcript", v_path}, {"ok", issues.empty()}, {"issues", issues}}.dump(2) << "\n";
    if (!issues.empty()) code = kExitError;
  });

  // run
  auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
  std::string r_config;
  run->add_option("--config", r_config, "config file")->required();
  run->callback([&] {
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(read_file(r_config));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::Parse, r_config + ": " + e.what());
    }
    code = run_cli(config_to_args(cfg), out, err);
  });

  std::vector<const char*> cargs;
  for (const auto& a : argv) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitError;
  }
  return code;
}

}  // namespace cli

inline int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  try {
    return cli::dispatch(argv, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace idealgames
