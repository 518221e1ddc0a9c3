#include "gonora/sweep.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int render(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        std::cerr << "--report: cannot open '" << path << "'\n";
        return 2;
    }
    try {
        std::cout << gonora::emit_report(gonora::read_csv(in));
    } catch (const gonora::CsvError& e) {
        std::cerr << "--report " << path << ": malformed CSV: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    gonora::RunPlan plan;
    try {
        plan = gonora::parse_cli(argc, argv);
    } catch (const gonora::UsageError& e) {
        (e.exit_code() == 0 ? std::cout : std::cerr) << e.what() << '\n';
        return e.exit_code();
    }
    if (plan.report_input)
        return render(*plan.report_input);

    gonora::SweepResult result;
    try {
        result = gonora::run_sweep(plan);
    } catch (const gonora::UsageError& e) {
        std::cerr << e.what() << '\n';
        return e.exit_code();
    }

    const std::filesystem::path out(plan.output);
    if (out.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(out.parent_path(), ec);
    }
    std::ofstream file(out);
    if (!file) {
        std::cerr << "--output: cannot write '" << plan.output << "'\n";
        return 2;
    }
    gonora::write_csv(file, result.table);
    file.close();

    for (const auto& e : result.errors)
        std::cerr << e << '\n';
    std::cout << "wrote " << plan.output << " (" << result.table.rows.size() << " rows, mode "
              << gonora::to_string(plan.mode) << ")\n\n"
              << gonora::emit_report(result.table);
    return gonora::exit_code(plan, result);
}
