#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "storsim/errors.hpp"
#include "storsim/measurement.hpp"

namespace storsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string fixed(double value, int precision = 6) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw PlatformError("cannot write artifact file '" + path.string() + "'");
  return out;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

void write_survey_csv(const RunArtifacts& artifacts, const fs::path& path) {
  auto out = open_out(path);
  out << "episode,agent,vote,poll_failed";
  for (const auto& candidate : artifacts.candidates)
    out << ",fav_" << slug(candidate.name);
  out << "\n";
  for (const auto& record : artifacts.surveys) {
    out << record.episode << "," << record.agent << "," << record.vote << ","
        << (record.poll_failed ? 1 : 0);
    for (const auto& candidate : artifacts.candidates) {
      out << ",";
      auto it = record.favorability.find(candidate.name);
      if (it != record.favorability.end() && it->second)
        out << *it->second;
    }
    out << "\n";
  }
}

void write_analytics_csv(const RunArtifacts& artifacts, const fs::path& path) {
  auto out = open_out(path);
  out << "episode";
  for (const auto& candidate : artifacts.candidates)
    out << ",vote_share_" << slug(candidate.name);
  out << ",vote_share_undecided";
  for (const auto& candidate : artifacts.candidates)
    out << ",mean_fav_" << slug(candidate.name);
  for (const auto& candidate : artifacts.candidates)
    out << ",mentions_" << slug(candidate.name);
  for (int i = 0; i < kEventKindCount; ++i)
    out << "," << to_string(static_cast<EventKind>(i));
  out << ",active_agents\n";

  for (const auto& snapshot : artifacts.analytics) {
    out << snapshot.episode;
    for (const auto& [name, share] : snapshot.vote_share)
      out << "," << fixed(share);
    for (const auto& candidate : artifacts.candidates)
      out << "," << fixed(snapshot.mean_favorability.at(candidate.name), 4);
    for (const auto& candidate : artifacts.candidates)
      out << "," << snapshot.mention_counts.at(candidate.name);
    for (int i = 0; i < kEventKindCount; ++i)
      out << ","
          << snapshot.activity_counts.at(to_string(static_cast<EventKind>(i)));
    out << "," << snapshot.active_accounts.size() << "\n";
  }
}

// ---------------------------------------------------------------------------
// GEXF graph snapshots
// ---------------------------------------------------------------------------

void write_gexf(const RunArtifacts& artifacts, const AnalyticsSnapshot& snapshot,
                const fs::path& path) {
  // vote per account for this episode
  std::map<AccountId, std::string> vote_of;
  for (const auto& record : artifacts.surveys) {
    if (record.episode != snapshot.episode) continue;
    auto it = artifacts.account_of.find(record.agent);
    if (it != artifacts.account_of.end()) vote_of[it->second] = record.vote;
  }
  std::map<AccountId, std::string> name_of;
  std::map<AccountId, std::string> role_of;
  for (const auto& spec : artifacts.agent_specs) {
    auto it = artifacts.account_of.find(spec.name);
    if (it == artifacts.account_of.end()) continue;
    name_of[it->second] = spec.name;
    role_of[it->second] = to_string(spec.role);
  }

  auto out = open_out(path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<gexf xmlns=\"http://gexf.net/1.3\" version=\"1.3\">\n"
      << "  <graph defaultedgetype=\"directed\">\n"
      << "    <attributes class=\"node\">\n"
      << "      <attribute id=\"0\" title=\"vote\" type=\"string\"/>\n"
      << "      <attribute id=\"1\" title=\"role\" type=\"string\"/>\n"
      << "    </attributes>\n"
      << "    <attributes class=\"edge\">\n"
      << "      <attribute id=\"0\" title=\"active\" type=\"boolean\"/>\n"
      << "    </attributes>\n"
      << "    <nodes>\n";
  for (const auto& [account, name] : name_of) {
    std::string vote = vote_of.count(account) ? vote_of.at(account) : kUndecided;
    out << "      <node id=\"" << xml_escape(account) << "\" label=\""
        << xml_escape(name) << "\">\n"
        << "        <attvalues>\n"
        << "          <attvalue for=\"0\" value=\"" << xml_escape(vote)
        << "\"/>\n"
        << "          <attvalue for=\"1\" value=\""
        << xml_escape(role_of.at(account)) << "\"/>\n"
        << "        </attvalues>\n"
        << "      </node>\n";
  }
  out << "    </nodes>\n    <edges>\n";
  int edge_id = 0;
  for (const auto& [from, to] : snapshot.graph_edges) {
    bool active = snapshot.active_accounts.count(from) > 0;
    out << "      <edge id=\"" << edge_id++ << "\" source=\""
        << xml_escape(from) << "\" target=\"" << xml_escape(to) << "\">\n"
        << "        <attvalues><attvalue for=\"0\" value=\""
        << (active ? "true" : "false") << "\"/></attvalues>\n"
        << "      </edge>\n";
  }
  out << "    </edges>\n  </graph>\n</gexf>\n";
}

// ---------------------------------------------------------------------------
// SVG chart
// ---------------------------------------------------------------------------

struct Panel {
  double x0, y0, x1, y1;  // plot area in SVG coordinates, y grows downward
  double ymin, ymax;
  int episodes;

  double px(double episode) const {
    double t = episodes > 1 ? episode / (episodes - 1) : 0.0;
    return x0 + t * (x1 - x0);
  }
  double py(double value) const {
    double t = (value - ymin) / (ymax - ymin);
    return y1 - t * (y1 - y0);
  }
};

const char* kSeriesColors[] = {"#c0392b", "#2980b9", "#555555", "#8e44ad"};

void polyline(std::ostream& out, const Panel& panel,
              const std::vector<double>& values, const char* color) {
  out << "  <polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << " ";
    out << fixed(panel.px(static_cast<double>(i)), 2) << ","
        << fixed(panel.py(values[i]), 2);
  }
  out << "\"/>\n";
}

void panel_frame(std::ostream& out, const Panel& panel, const std::string& title,
                 int y_ticks, int episodes) {
  out << "  <rect x=\"" << fixed(panel.x0, 2) << "\" y=\"" << fixed(panel.y0, 2)
      << "\" width=\"" << fixed(panel.x1 - panel.x0, 2) << "\" height=\""
      << fixed(panel.y1 - panel.y0, 2)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  out << "  <text x=\"" << fixed(panel.x0, 2) << "\" y=\""
      << fixed(panel.y0 - 8, 2) << "\" font-size=\"14\" fill=\"#111111\">"
      << xml_escape(title) << "</text>\n";
  for (int i = 0; i <= y_ticks; ++i) {
    double value = panel.ymin + (panel.ymax - panel.ymin) * i / y_ticks;
    double y = panel.py(value);
    out << "  <line x1=\"" << fixed(panel.x0 - 4, 2) << "\" y1=\""
        << fixed(y, 2) << "\" x2=\"" << fixed(panel.x0, 2) << "\" y2=\""
        << fixed(y, 2) << "\" stroke=\"#333333\"/>\n";
    out << "  <text x=\"" << fixed(panel.x0 - 8, 2) << "\" y=\""
        << fixed(y + 4, 2)
        << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#333333\">"
        << fixed(value, panel.ymax <= 1.0 ? 2 : 0) << "</text>\n";
  }
  int x_step = std::max(1, episodes / 8);
  for (int e = 0; e < episodes; e += x_step) {
    double x = panel.px(e);
    out << "  <line x1=\"" << fixed(x, 2) << "\" y1=\"" << fixed(panel.y1, 2)
        << "\" x2=\"" << fixed(x, 2) << "\" y2=\"" << fixed(panel.y1 + 4, 2)
        << "\" stroke=\"#333333\"/>\n";
    out << "  <text x=\"" << fixed(x, 2) << "\" y=\"" << fixed(panel.y1 + 16, 2)
        << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#333333\">" << e
        << "</text>\n";
  }
}

void write_chart_svg(const RunArtifacts& artifacts, const fs::path& path) {
  int episodes = std::max<std::size_t>(artifacts.analytics.size(), 1);

  std::vector<std::string> share_names;
  for (const auto& candidate : artifacts.candidates)
    share_names.push_back(candidate.name);
  share_names.push_back(kUndecided);

  std::map<std::string, std::vector<double>> shares;
  std::map<std::string, std::vector<double>> favorability;
  for (const auto& snapshot : artifacts.analytics) {
    for (const auto& [name, value] : snapshot.vote_share)
      shares[name].push_back(value);
    for (const auto& candidate : artifacts.candidates)
      favorability[candidate.name].push_back(
          snapshot.mean_favorability.at(candidate.name));
  }

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" "
         "height=\"620\" viewBox=\"0 0 900 620\">\n"
      << "  <rect width=\"900\" height=\"620\" fill=\"#ffffff\"/>\n";

  Panel votes{70, 40, 860, 280, 0.0, 1.0, episodes};
  panel_frame(out, votes, "Vote share per episode", 5, episodes);
  for (std::size_t i = 0; i < share_names.size(); ++i) {
    if (!shares.count(share_names[i])) continue;
    polyline(out, votes, shares.at(share_names[i]),
             kSeriesColors[std::min<std::size_t>(i, 3)]);
  }

  Panel fav{70, 350, 860, 570, 1.0, 10.0, episodes};
  panel_frame(out, fav, "Mean candidate favorability (1-10)", 9, episodes);
  for (std::size_t i = 0; i < artifacts.candidates.size(); ++i) {
    const auto& name = artifacts.candidates[i].name;
    if (!favorability.count(name)) continue;
    polyline(out, fav, favorability.at(name),
             kSeriesColors[std::min<std::size_t>(i, 3)]);
  }

  // Legend
  double lx = 70, ly = 600;
  for (std::size_t i = 0; i < share_names.size(); ++i) {
    out << "  <rect x=\"" << fixed(lx, 2) << "\" y=\"" << fixed(ly - 10, 2)
        << "\" width=\"12\" height=\"12\" fill=\""
        << kSeriesColors[std::min<std::size_t>(i, 3)] << "\"/>\n";
    out << "  <text x=\"" << fixed(lx + 18, 2) << "\" y=\"" << fixed(ly, 2)
        << "\" font-size=\"12\" fill=\"#111111\">" << xml_escape(share_names[i])
        << "</text>\n";
    lx += 220;
  }
  out << "</svg>\n";
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string RunManifest::to_json_text() const {
  Json j;
  j["schema_version"] = schema_version;
  j["config_hash"] = config_hash;
  j["root_seed"] = root_seed;
  j["backend"] = backend;
  j["variant"] = variant;
  j["num_agents"] = num_agents;
  j["first_episode"] = first_episode;
  j["final_episode"] = final_episode;
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("manifest parse error: ") + e.what());
  }
  RunManifest manifest;
  manifest.schema_version = j.at("schema_version").get<int>();
  manifest.config_hash = j.at("config_hash").get<std::string>();
  manifest.root_seed = j.at("root_seed").get<std::uint64_t>();
  manifest.backend = j.at("backend").get<std::string>();
  manifest.variant = j.at("variant").get<std::string>();
  manifest.num_agents = j.at("num_agents").get<int>();
  manifest.first_episode = j.at("first_episode").get<int>();
  manifest.final_episode = j.at("final_episode").get<int>();
  manifest.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  return manifest;
}

// ---------------------------------------------------------------------------
// Export entry point
// ---------------------------------------------------------------------------

std::vector<std::string> export_artifacts(const RunArtifacts& artifacts,
                                          const std::string& out_dir,
                                          const ExportFormats& formats) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir))
    throw PlatformError("cannot create output directory '" + out_dir + "'");

  std::vector<std::string> written;
  if (formats.csv) {
    write_survey_csv(artifacts, fs::path(out_dir) / "survey.csv");
    written.push_back("survey.csv");
    write_analytics_csv(artifacts, fs::path(out_dir) / "analytics.csv");
    written.push_back("analytics.csv");
  }
  if (formats.gexf) {
    fs::path graphs = fs::path(out_dir) / "graphs";
    fs::create_directories(graphs, ec);
    if (!fs::is_directory(graphs))
      throw PlatformError("cannot create graphs directory under '" + out_dir +
                          "'");
    for (const auto& snapshot : artifacts.analytics) {
      char name[32];
      std::snprintf(name, sizeof(name), "episode_%03d.gexf", snapshot.episode);
      write_gexf(artifacts, snapshot, graphs / name);
      written.push_back(std::string("graphs/") + name);
    }
  }
  if (formats.svg) {
    write_chart_svg(artifacts, fs::path(out_dir) / "chart.svg");
    written.push_back("chart.svg");
  }
  return written;
}

}  // namespace storsim
