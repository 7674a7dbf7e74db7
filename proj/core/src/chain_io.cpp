// Copyright 2026 The fes Authors
// Licensed under the Apache License, Version 2.0 (see LICENSE file)

#include "fes/chain_io.hpp"

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <vector>

#include "fes/error.hpp"

namespace fes {

namespace {

constexpr const char* kMagic = "# fes-chain 1";

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  char host[256] = "unknown";
  gethostname(host, sizeof host - 1);
  return std::string(buf) + " host " + host;
}

std::size_t parse_size(const std::string& s, const std::filesystem::path& path) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError(path.string() + ": expected an integer, got '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvalidArgument("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw InvalidArgument("not a number: '" + text + "'");
  return v;
}

void write_chain(const std::filesystem::path& path, const ChainRecord& record,
                 bool stamp) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << kMagic << '\n';
  if (stamp) out << "# created " << timestamp() << '\n';
  for (const auto& [k, v] : record.meta) out << "# meta " << k << ' ' << v << '\n';
  out << "# burn_in_fraction " << format_double(record.burn_in_fraction) << '\n';
  out << "# omega " << format_double(record.omega) << '\n';
  for (const auto& [stage, rate] : record.acceptance)
    out << "# acceptance " << stage << ' ' << format_double(rate) << '\n';
  for (const auto& t : record.tuning)
    out << "# tuning " << t.iteration << ' ' << format_double(t.rate) << ' '
        << format_double(t.omega) << '\n';

  out << "iteration\twalker";
  for (const auto& n : record.names) out << '\t' << n;
  out << '\n';
  for (std::size_t r = 0; r < record.rows; ++r)
    for (std::size_t w = 0; w < record.walkers; ++w) {
      out << r << '\t' << w;
      for (std::size_t k = 0; k < record.names.size(); ++k)
        out << '\t' << format_double(record.at(k, r, w));
      out << '\n';
    }
  if (!out) throw IoError(path.string() + ": write failed");
}

ChainRecord read_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  ChainRecord rec;
  std::string line;
  bool have_columns = false;
  std::size_t expected_row = 0, expected_walker = 0, max_walker = 0;
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  std::vector<std::vector<double>> columns;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto tok = split_ws(line.substr(1));
      if (tok.empty()) continue;
      if (tok[0] == "meta" && tok.size() >= 3) {
        std::string value = tok[2];
        for (std::size_t k = 3; k < tok.size(); ++k) value += " " + tok[k];
        rec.meta[tok[1]] = value;
      } else if (tok[0] == "burn_in_fraction" && tok.size() == 2) {
        rec.burn_in_fraction = parse_double(tok[1]);
      } else if (tok[0] == "omega" && tok.size() == 2) {
        rec.omega = parse_double(tok[1]);
      } else if (tok[0] == "acceptance" && tok.size() == 3) {
        rec.acceptance[tok[1]] = parse_double(tok[2]);
      } else if (tok[0] == "tuning" && tok.size() == 4) {
        rec.tuning.push_back({parse_size(tok[1], path), parse_double(tok[2]),
                              parse_double(tok[3])});
      }
      continue;
    }
    const auto tok = split_ws(line);
    if (!have_columns) {
      if (tok.size() < 2 || tok[0] != "iteration" || tok[1] != "walker")
        throw IoError(path.string() + ": missing 'iteration walker' column header");
      rec.names.assign(tok.begin() + 2, tok.end());
      columns.resize(rec.names.size());
      have_columns = true;
      continue;
    }
    if (tok.size() != rec.names.size() + 2)
      throw IoError(path.string() + ": row has " + std::to_string(tok.size()) +
                    " fields, expected " + std::to_string(rec.names.size() + 2));
    const std::size_t r = parse_size(tok[0], path);
    const std::size_t w = parse_size(tok[1], path);
    keys.emplace_back(r, w);
    max_walker = std::max(max_walker, w);
    for (std::size_t k = 0; k < rec.names.size(); ++k) {
      try {
        columns[k].push_back(parse_double(tok[k + 2]));
      } catch (const InvalidArgument& e) {
        throw IoError(path.string() + ": " + e.what());
      }
    }
  }
  if (!have_columns) throw IoError(path.string() + ": no column header found");
  rec.walkers = keys.empty() ? 0 : max_walker + 1;
  if (rec.walkers > 0 && keys.size() % rec.walkers != 0)
    throw IoError(path.string() + ": ragged chain (rows not a multiple of walkers)");
  rec.rows = rec.walkers == 0 ? 0 : keys.size() / rec.walkers;
  for (const auto& [r, w] : keys) {
    if (r != expected_row || w != expected_walker)
      throw IoError(path.string() + ": rows out of order at iteration " +
                    std::to_string(r) + " walker " + std::to_string(w));
    if (++expected_walker == rec.walkers) {
      expected_walker = 0;
      ++expected_row;
    }
  }
  rec.values = std::move(columns);
  return rec;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  for (std::size_t c = 0; c < data.columns.size(); ++c)
    out << (c ? "\t" : "") << data.columns[c];
  out << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "\t" : "") << format_double(row[c]);
    out << '\n';
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string read_body(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::string line, body;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line;
    body += '\n';
  }
  return body;
}

}  // namespace fes
