#pragma once

#include <string>

#include "dynef/model.hpp"

namespace dynef {

enum class SeriesFormat {
  long_form,  // header "unit,t,symbol", one row per (unit, t)
  dense       // no header, one row per unit with T comma-separated symbols
};

void write_series_csv(const std::string& path, const TimeSeries& x,
                      SeriesFormat format = SeriesFormat::long_form);

/// Reads either format (the long form is detected by its header line).
TimeSeries read_series_csv(const std::string& path);

}  // namespace dynef
