#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "otlab/errors.hpp"
#include "otlab/experiments.hpp"

namespace otlab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const MetricReport* RunReport::find_metric(const std::string& name) const
{
    for (const auto& m : metrics)
        if (m.name == name)
            return &m;
    return nullptr;
}

double RunReport::metric(const std::string& name) const
{
    const MetricReport* m = find_metric(name);
    if (!m)
        throw ContractError("report has no metric " + name);
    return m->value;
}

const Check* RunReport::find_check(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

void write_file(const fs::path& path, const std::string& body)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << body;
    if (!out)
        throw Error("failed writing " + path.string());
}

std::string table_csv(const CsvTable& t)
{
    std::string s;
    if (!t.comment.empty())
        s += "# " + t.comment + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        s += (i ? "," : "") + csv_field(t.columns[i]);
    s += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            s += (i ? "," : "") + csv_field(row[i]);
        s += "\n";
    }
    return s;
}

std::string trace_csv(const TrainTrace& tr)
{
    std::string s;
    if (!tr.gan.empty() || tr.ots.empty()) {
        s += "# generator iteration; critic loss (last critic step, penalty included); generator loss; gradient penalty\n";
        s += "iter,loss_disc,loss_gen,gp\n";
        for (const auto& r : tr.gan)
            s += std::to_string(r.iter) + "," + format_number(r.loss_disc) + "," + format_number(r.loss_gen) + "," +
                 format_number(r.gp) + "\n";
    } else {
        s += "# potential iteration; potential loss mean f(T(x)) - mean f(y); map loss of the last inner step\n";
        s += "iter,loss_f,loss_T\n";
        for (const auto& r : tr.ots)
            s += std::to_string(r.iter) + "," + format_number(r.loss_f) + "," + format_number(r.loss_T) + "\n";
    }
    return s;
}

ordered_json number_json(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

}  // namespace

std::string report_json(const RunReport& r)
{
    ordered_json j;
    j["experiment"] = r.experiment;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["config"] = r.config_text;
    ordered_json metrics = ordered_json::array();
    for (const auto& m : r.metrics) {
        ordered_json e;
        e["name"] = m.name;
        e["value"] = number_json(m.value);
        e["spread"] = number_json(m.spread);
        e["n_samples"] = m.n_samples;
        e["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
        e["tolerance_used"] = m.tolerance_used ? number_json(*m.tolerance_used) : ordered_json(nullptr);
        metrics.push_back(e);
    }
    j["metrics"] = metrics;
    ordered_json checks = ordered_json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    j["checks"] = checks;
    ordered_json tables = ordered_json::array();
    for (const auto& t : r.tables)
        tables.push_back("table_" + t.name + ".csv");
    j["tables"] = tables;
    ordered_json traces = ordered_json::array();
    for (const auto& t : r.traces)
        traces.push_back("trace_" + t.name + ".csv");
    j["traces"] = traces;
    j["notes"] = r.notes;
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::string& dir)
{
    fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec)
        throw Error("cannot create output directory " + dir + ": " + ec.message());
    for (const auto& t : report.tables)
        write_file(root / ("table_" + t.name + ".csv"), table_csv(t));
    for (const auto& t : report.traces)
        write_file(root / ("trace_" + t.name + ".csv"), trace_csv(t.trace));
    // Written last so every file it lists already exists.
    write_file(root / "report.json", report_json(report));
}

void run_pool(std::vector<std::function<void()>> tasks, std::size_t workers)
{
    if (workers == 0)
        workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            try {
                tasks[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) {
                    try {
                        tasks[i]();
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace otlab
