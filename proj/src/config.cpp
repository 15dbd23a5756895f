#include "bwadapt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace bwadapt
{
    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
            {
                return {};
            }
            const auto last = s.find_last_not_of(" \t\r");
            return std::string(s.substr(first, last - first + 1));
        }

        struct Entry
        {
            std::string value;
            int line = 0;
        };

        struct Section
        {
            int line = 0;
            std::map<std::string, Entry> entries;
        };

        class Parser
        {
        public:
            explicit Parser(std::string source) : source_(std::move(source)) {}

            [[noreturn]] void fail(int line, const std::string &message) const
            {
                std::ostringstream os;
                os << source_;
                if (line > 0)
                {
                    os << ':' << line;
                }
                os << ": " << message;
                throw ConfigError(os.str());
            }

            double number(const Entry &e, const std::string &key) const
            {
                double v = 0.0;
                const char *begin = e.value.data();
                const char *end = begin + e.value.size();
                auto [ptr, ec] = std::from_chars(begin, end, v);
                if (ec != std::errc{} || ptr != end)
                {
                    fail(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
                }
                return v;
            }

            std::uint64_t integer(const Entry &e, const std::string &key) const
            {
                std::uint64_t v = 0;
                const char *begin = e.value.data();
                const char *end = begin + e.value.size();
                auto [ptr, ec] = std::from_chars(begin, end, v);
                if (ec != std::errc{} || ptr != end)
                {
                    fail(e.line, "'" + key + "' expects a non-negative integer, got '" + e.value + "'");
                }
                return v;
            }

            bool boolean(const Entry &e, const std::string &key) const
            {
                if (e.value == "true" || e.value == "yes" || e.value == "1")
                {
                    return true;
                }
                if (e.value == "false" || e.value == "no" || e.value == "0")
                {
                    return false;
                }
                fail(e.line, "'" + key + "' expects true or false, got '" + e.value + "'");
            }

            const Entry &required(const Section &s, const std::string &name, const std::string &key) const
            {
                auto it = s.entries.find(key);
                if (it == s.entries.end())
                {
                    fail(s.line, "section [" + name + "] is missing '" + key + "'");
                }
                return it->second;
            }

            const Entry *optional(const Section &s, const std::string &key) const
            {
                auto it = s.entries.find(key);
                return it == s.entries.end() ? nullptr : &it->second;
            }

        private:
            std::string source_;
        };

        const std::set<std::string> kTopKeys{"capacity_kbps", "classes"};
        const std::set<std::string> kClassKeys{"bandwidth_kbps", "gamma0",          "gamma_decay",
                                               "weight",         "mean_duration_s", "elastic"};
        const std::set<std::string> kSimulationKeys{"lambda", "dwell_s", "duration_s", "warmup_s",
                                                    "seed",   "scheme",  "batches",    "service"};

        // Accepts gamma_<p> with p >= 1.
        std::optional<std::size_t> gamma_override_index(const std::string &key)
        {
            if (key.rfind("gamma_", 0) != 0 || key == "gamma_decay")
            {
                return std::nullopt;
            }
            std::size_t p = 0;
            const char *begin = key.data() + 6;
            const char *end = key.data() + key.size();
            auto [ptr, ec] = std::from_chars(begin, end, p);
            if (ec != std::errc{} || ptr != end || p == 0)
            {
                return std::nullopt;
            }
            return p;
        }

        std::string fmt(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.10g", v);
            return buf;
        }
    }

    ScenarioConfig parse_config(std::string_view text, const std::string &source)
    {
        Parser parser(source);
        Section top;
        top.line = 1;
        std::map<std::string, Section> class_sections;
        std::optional<Section> simulation;
        Section *current = &top;
        std::string current_name;
        const std::set<std::string> *allowed = &kTopKeys;

        std::istringstream in{std::string(text)};
        std::string raw;
        int line = 0;
        while (std::getline(in, raw))
        {
            ++line;
            const auto hash = raw.find('#');
            const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (content.empty())
            {
                continue;
            }
            if (content.front() == '[')
            {
                if (content.back() != ']')
                {
                    parser.fail(line, "unterminated section header");
                }
                const std::string header = trim(std::string_view(content).substr(1, content.size() - 2));
                if (header == "simulation")
                {
                    if (simulation)
                    {
                        parser.fail(line, "duplicate section [simulation]");
                    }
                    simulation.emplace();
                    simulation->line = line;
                    current = &*simulation;
                    allowed = &kSimulationKeys;
                }
                else if (header.rfind("class ", 0) == 0)
                {
                    const std::string name = trim(std::string_view(header).substr(6));
                    if (name.empty())
                    {
                        parser.fail(line, "class section needs a name");
                    }
                    auto [it, inserted] = class_sections.try_emplace(name);
                    if (!inserted)
                    {
                        parser.fail(line, "duplicate section [class " + name + "]");
                    }
                    it->second.line = line;
                    current = &it->second;
                    allowed = &kClassKeys;
                }
                else
                {
                    parser.fail(line, "unknown section [" + header + "]");
                }
                current_name = header;
                continue;
            }

            const auto eq = content.find('=');
            if (eq == std::string::npos)
            {
                parser.fail(line, "expected 'key = value'");
            }
            const std::string key = trim(std::string_view(content).substr(0, eq));
            const std::string value = trim(std::string_view(content).substr(eq + 1));
            const bool override_key = allowed == &kClassKeys && gamma_override_index(key).has_value();
            if (!allowed->contains(key) && !override_key)
            {
                parser.fail(line, "unknown key '" + key + "'" +
                                      (current_name.empty() ? std::string() : " in [" + current_name + "]"));
            }
            if (value.empty())
            {
                parser.fail(line, "key '" + key + "' has no value");
            }
            if (!current->entries.try_emplace(key, Entry{value, line}).second)
            {
                parser.fail(line, "duplicate key '" + key + "'");
            }
        }

        ScenarioConfig config;
        config.capacity_kbps = parser.number(parser.required(top, "top level", "capacity_kbps"), "capacity_kbps");

        std::vector<std::string> names;
        {
            const Entry &list = parser.required(top, "top level", "classes");
            std::istringstream items(list.value);
            std::string item;
            while (std::getline(items, item, ','))
            {
                item = trim(item);
                if (item.empty())
                {
                    parser.fail(list.line, "empty class name in 'classes'");
                }
                if (std::find(names.begin(), names.end(), item) != names.end())
                {
                    parser.fail(list.line, "class '" + item + "' listed twice");
                }
                names.push_back(item);
            }
        }
        for (const auto &[name, section] : class_sections)
        {
            if (std::find(names.begin(), names.end(), name) == names.end())
            {
                parser.fail(section.line, "section [class " + name + "] is not listed in 'classes'");
            }
        }

        const std::size_t M = names.size();
        config.classes.clear();
        for (std::size_t i = 0; i < M; ++i)
        {
            const std::string &name = names[i];
            auto it = class_sections.find(name);
            if (it == class_sections.end())
            {
                parser.fail(0, "missing section [class " + name + "]");
            }
            const Section &s = it->second;
            const std::string label = "class " + name;
            TrafficClass c;
            c.name = name;
            c.index = i + 1;
            c.requested_kbps = parser.number(parser.required(s, label, "bandwidth_kbps"), "bandwidth_kbps");
            const double gamma0 = parser.number(parser.required(s, label, "gamma0"), "gamma0");
            const double decay = parser.number(parser.required(s, label, "gamma_decay"), "gamma_decay");
            c.gamma = geometric_gamma_row(gamma0, decay, M);
            for (const auto &[key, entry] : s.entries)
            {
                if (auto p = gamma_override_index(key))
                {
                    if (*p > M)
                    {
                        parser.fail(entry.line, "'" + key + "' is beyond the last priority " + std::to_string(M));
                    }
                    c.gamma[*p] = parser.number(entry, key);
                }
            }
            c.arrival_weight = parser.number(parser.required(s, label, "weight"), "weight");
            c.mean_duration_s = parser.number(parser.required(s, label, "mean_duration_s"), "mean_duration_s");
            c.elastic = parser.boolean(parser.required(s, label, "elastic"), "elastic");
            config.classes.push_back(std::move(c));
        }

        if (!simulation)
        {
            parser.fail(0, "missing section [simulation]");
        }
        const Section &sim = *simulation;
        config.lambda = parser.number(parser.required(sim, "simulation", "lambda"), "lambda");
        if (auto e = parser.optional(sim, "dwell_s"))
        {
            config.mean_dwell_s = parser.number(*e, "dwell_s");
        }
        if (auto e = parser.optional(sim, "duration_s"))
        {
            config.duration_s = parser.number(*e, "duration_s");
        }
        if (auto e = parser.optional(sim, "warmup_s"))
        {
            config.warmup_s = parser.number(*e, "warmup_s");
        }
        if (auto e = parser.optional(sim, "seed"))
        {
            config.seed = parser.integer(*e, "seed");
        }
        if (auto e = parser.optional(sim, "batches"))
        {
            config.batches = static_cast<std::size_t>(parser.integer(*e, "batches"));
        }
        if (auto e = parser.optional(sim, "scheme"))
        {
            auto scheme = parse_scheme(e->value);
            if (!scheme)
            {
                parser.fail(e->line, "unknown scheme '" + e->value + "'");
            }
            config.scheme = *scheme;
        }
        if (auto e = parser.optional(sim, "service"))
        {
            if (e->value == "exponential")
            {
                config.service = ServiceDistribution::Exponential;
            }
            else if (e->value == "deterministic")
            {
                config.service = ServiceDistribution::Deterministic;
            }
            else
            {
                parser.fail(e->line, "unknown service distribution '" + e->value + "'");
            }
        }

        try
        {
            validate_config(config);
        }
        catch (const ConfigError &err)
        {
            throw ConfigError(source + ": " + err.what());
        }
        return config;
    }

    ScenarioConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw ConfigError(path.string() + ": cannot open config file");
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_config(buf.str(), path.string());
    }

    std::string format_policy_table(const PolicyMatrix &matrix)
    {
        const std::size_t M = matrix.num_classes();
        std::ostringstream os;
        auto header = [&](const char *title) {
            os << title << '\n';
            char buf[64];
            std::snprintf(buf, sizeof buf, "%-12s %14s", "class", "requested_kbps");
            os << buf;
            for (std::size_t p = 0; p <= M; ++p)
            {
                std::snprintf(buf, sizeof buf, " %14s", ("p=" + std::to_string(p)).c_str());
                os << buf;
            }
            os << '\n';
        };
        auto rows = [&](auto value) {
            for (std::size_t m = 1; m <= M; ++m)
            {
                const auto &c = matrix.traffic_class(m);
                char buf[64];
                std::snprintf(buf, sizeof buf, "%-12s %14s", c.name.c_str(), fmt(c.requested_kbps).c_str());
                os << buf;
                for (std::size_t p = 0; p <= M; ++p)
                {
                    std::snprintf(buf, sizeof buf, " %14s", fmt(value(m, p)).c_str());
                    os << buf;
                }
                os << '\n';
            }
        };
        header("# degradation factor gamma[m][p]");
        rows([&](std::size_t m, std::size_t p) { return matrix.gamma(m, p); });
        os << '\n';
        header("# floor_kbps[m][p] = (1 - gamma[m][p]) * requested_kbps");
        rows([&](std::size_t m, std::size_t p) { return matrix.floor(m, p); });
        return os.str();
    }
}
