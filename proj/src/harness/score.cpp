#include "apo/harness/score.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "apo/common/error.hpp"
#include "apo/nn/checkpoint.hpp"

namespace apo::harness {

namespace {

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string trim(std::string s) {
  const auto ws = " \t\r";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

double parse_double(const std::string& s, std::size_t line) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(x))
    throw RejectedInput("table line " + std::to_string(line) + ": bad number '" + s + "'");
  return x;
}

}  // namespace

double ScoreReport::score(const std::string& group, const std::string& agent) const {
  for (const auto& s : scores)
    if (s.group == group && s.agent == agent) return s.score;
  throw RejectedInput("no score for " + group + "/" + agent);
}

ScoreReport normalized_score(const std::vector<ComparisonRow>& rows) {
  ScoreReport rep;
  rep.rows = rows;
  std::vector<std::string> groups, agents;
  std::map<std::string, std::vector<std::string>> envs;
  std::map<std::tuple<std::string, std::string, std::string>, double> mean;
  for (const auto& r : rows) {
    push_unique(groups, r.group);
    push_unique(agents, r.agent);
    push_unique(envs[r.group], r.env);
    if (!mean.emplace(std::tuple{r.group, r.env, r.agent}, r.mean).second)
      throw RejectedInput("duplicate row for " + r.group + "/" + r.env + "/" + r.agent);
  }
  // baseline first, the rest as first seen
  if (auto it = std::find(agents.begin(), agents.end(), kBaselineAgent); it != agents.end())
    std::rotate(agents.begin(), it, it + 1);

  for (const auto& g : groups) {
    std::vector<std::string> usable;
    for (const auto& e : envs[g]) {
      auto it = mean.find({g, e, kBaselineAgent});
      if (it == mean.end()) {
        rep.excluded.push_back(g + "/" + e);
        rep.warnings.push_back(g + "/" + e + ": no ppo row, excluded");
      } else if (!(it->second > 0.0)) {
        rep.excluded.push_back(g + "/" + e);
        rep.warnings.push_back(g + "/" + e + ": ppo mean " + nn::format_real(it->second) +
                               " <= 0, excluded");
      } else {
        usable.push_back(e);
      }
    }
    for (const auto& a : agents) {
      GroupScore gs{g, a, 0.0, 0};
      if (a == kBaselineAgent) {
        gs.score = 1.0;
        gs.envs = usable.size();
        rep.scores.push_back(gs);
        continue;
      }
      double sum = 0.0;
      for (const auto& e : usable) {
        auto it = mean.find({g, e, a});
        if (it == mean.end()) continue;
        sum += it->second / mean.at({g, e, kBaselineAgent});
        ++gs.envs;
      }
      if (gs.envs == 0) continue;
      if (gs.envs < usable.size())
        rep.warnings.push_back(g + "/" + a + ": scored on " + std::to_string(gs.envs) + " of " +
                               std::to_string(usable.size()) + " envs");
      gs.score = sum / static_cast<double>(gs.envs);
      rep.scores.push_back(gs);
    }
  }
  return rep;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "group,env,agent,seeds,mean,std\n";
  for (const auto& r : rows)
    out << r.group << ',' << r.env << ',' << r.agent << ',' << r.seeds << ','
        << nn::format_real(r.mean) << ',' << nn::format_real(r.std) << '\n';
  return out.str();
}

std::vector<ComparisonRow> parse_comparison_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ComparisonRow> rows;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(trim(cell));
    if (!header) {
      if (f != std::vector<std::string>{"group", "env", "agent", "seeds", "mean", "std"})
        throw RejectedInput("table: expected header group,env,agent,seeds,mean,std");
      header = true;
      continue;
    }
    if (f.size() != 6)
      throw RejectedInput("table line " + std::to_string(lineno) + ": expected 6 fields");
    ComparisonRow r;
    r.group = f[0];
    r.env = f[1];
    r.agent = f[2];
    for (auto& c : r.agent) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    r.seeds = static_cast<std::size_t>(parse_double(f[3], lineno));
    r.mean = parse_double(f[4], lineno);
    r.std = parse_double(f[5], lineno);
    rows.push_back(r);
  }
  if (!header) throw RejectedInput("table: empty");
  return rows;
}

std::vector<ComparisonRow> read_comparison_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RejectedInput("cannot open table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_comparison_csv(buf.str());
}

std::string comparison_markdown(const std::vector<ComparisonRow>& rows) {
  std::vector<std::string> agents;
  std::vector<std::pair<std::string, std::string>> envs;
  for (const auto& r : rows) {
    push_unique(agents, r.agent);
    push_unique(envs, std::pair{r.group, r.env});
  }
  std::ostringstream out;
  out << "| group | env |";
  for (const auto& a : agents) out << ' ' << a << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < agents.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& [g, e] : envs) {
    out << "| " << g << " | " << e << " |";
    for (const auto& a : agents) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const ComparisonRow& r) {
        return r.group == g && r.env == e && r.agent == a;
      });
      if (it == rows.end())
        out << " - |";
      else
        out << ' ' << fixed(it->mean, 2) << " ± " << fixed(it->std, 2) << " (n=" << it->seeds
            << ") |";
    }
    out << '\n';
  }
  return out.str();
}

std::string scores_csv(const ScoreReport& r) {
  std::ostringstream out;
  out << "group,agent,score,envs\n";
  for (const auto& s : r.scores)
    out << s.group << ',' << s.agent << ',' << nn::format_real(s.score) << ',' << s.envs << '\n';
  return out.str();
}

std::string scores_markdown(const ScoreReport& r) {
  std::vector<std::string> agents, groups;
  for (const auto& s : r.scores) {
    push_unique(agents, s.agent);
    push_unique(groups, s.group);
  }
  std::ostringstream out;
  out << "| group |";
  for (const auto& a : agents) out << ' ' << a << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < agents.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& g : groups) {
    out << "| " << g << " |";
    for (const auto& a : agents) {
      auto it = std::find_if(r.scores.begin(), r.scores.end(),
                             [&](const GroupScore& s) { return s.group == g && s.agent == a; });
      out << ' ' << (it == r.scores.end() ? std::string("-") : fixed(it->score, 2)) << " |";
    }
    out << '\n';
  }
  for (const auto& w : r.warnings) out << "\nwarning: " << w;
  if (!r.warnings.empty()) out << '\n';
  return out.str();
}

}  // namespace apo::harness
