#include "leosim/orbits.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "leosim/constants.hpp"

namespace leosim {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400 + (m <= 2);
}

const long long kJ2000Days = days_from_civil(2000, 1, 1);

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

double field_double(std::string_view line, std::size_t col, std::size_t len, std::size_t line_no,
                    const char* what) {
  std::string_view f = trim(line.substr(col - 1, len));
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size())
    throw TleParseError(line_no, std::string("unparsable ") + what + " '" + std::string(f) + "'");
  return v;
}

int field_int(std::string_view line, std::size_t col, std::size_t len, std::size_t line_no,
              const char* what) {
  std::string_view f = trim(line.substr(col - 1, len));
  int v = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size())
    throw TleParseError(line_no, std::string("unparsable ") + what + " '" + std::string(f) + "'");
  return v;
}

void check_element_line(std::string_view line, char tag, std::size_t line_no) {
  if (line.size() != 69)
    throw TleParseError(line_no, "expected 69 characters, found " + std::to_string(line.size()));
  if (line[0] != tag || line[1] != ' ')
    throw TleParseError(line_no, std::string("expected line to start with '") + tag + " '");
  const char last = line[68];
  if (last < '0' || last > '9') throw TleParseError(line_no, "checksum column is not a digit");
  if (tle_checksum(line) != last - '0')
    throw TleParseError(line_no, "checksum mismatch (computed " + std::to_string(tle_checksum(line)) +
                                     ", stored " + std::string(1, last) + ")");
}

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

UtcTime utc_from_calendar(int year, int month, int day, int hour, int minute, double second) {
  const long long days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) -
                         kJ2000Days;
  return {static_cast<double>(days) * kSecondsPerDay - 43200.0 + hour * 3600.0 + minute * 60.0 +
          second};
}

UtcTime parse_iso8601(std::string_view text) {
  std::string s(trim(text));
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%lf%n", &y, &mo, &d, &sep, &h, &mi, &sec,
                            &consumed);
  if (n < 7 || (sep != 'T' && sep != ' '))
    throw std::invalid_argument("not an ISO-8601 timestamp: '" + s + "'");
  std::string_view rest(s.c_str() + consumed);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
    throw std::invalid_argument("only UTC timestamps are supported: '" + s + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec < 0.0 || sec >= 61.0)
    throw std::invalid_argument("timestamp field out of range: '" + s + "'");
  return utc_from_calendar(y, mo, d, h, mi, sec);
}

std::string format_iso8601(UtcTime t) {
  const double s = t.seconds_since_j2000 + 43200.0;
  const double day_f = std::floor(s / kSecondsPerDay);
  double sod = s - day_f * kSecondsPerDay;
  int y;
  unsigned m, d;
  civil_from_days(static_cast<long long>(day_f) + kJ2000Days, y, m, d);
  const int h = static_cast<int>(sod / 3600.0);
  sod -= h * 3600.0;
  const int mi = static_cast<int>(sod / 60.0);
  sod -= mi * 60.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%06.3fZ", y, m, d, h, mi, sod);
  return buf;
}

double julian_date(UtcTime t) { return 2451545.0 + t.seconds_since_j2000 / kSecondsPerDay; }

double utc_hour_of_day(UtcTime t) {
  double sod = std::fmod(t.seconds_since_j2000 + 43200.0, kSecondsPerDay);
  if (sod < 0.0) sod += kSecondsPerDay;
  return sod / 3600.0;
}

double gmst(UtcTime t) {
  const double s = t.seconds_since_j2000;
  const double tc = s / (kSecondsPerDay * 36525.0);
  // 876600 h * T is exactly s; folding it mod one day first keeps precision.
  double sec = 67310.54841 + std::fmod(s, kSecondsPerDay) + 8640184.812866 * tc +
               0.093104 * tc * tc - 6.2e-6 * tc * tc * tc;
  sec = std::fmod(sec, kSecondsPerDay);
  if (sec < 0.0) sec += kSecondsPerDay;
  return sec * (kTwoPi / kSecondsPerDay);
}

void TimeGrid::validate() const {
  if (!(slot_seconds > 0.0)) throw std::invalid_argument("time grid: slot_seconds must be > 0");
  if (num_slots < 1) throw std::invalid_argument("time grid: num_slots must be >= 1");
}

double TleRecord::semi_major_axis_km() const {
  const double n = mean_motion * kTwoPi / kSecondsPerDay;
  return std::cbrt(kMuEarth / (n * n));
}

int tle_checksum(std::string_view line) {
  int sum = 0;
  for (std::size_t i = 0; i < 68 && i < line.size(); ++i) {
    const char c = line[i];
    if (c >= '0' && c <= '9') sum += c - '0';
    else if (c == '-') sum += 1;
  }
  return sum % 10;
}

std::vector<TleRecord> parse_tle(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    ++line_no;
    while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ' || raw.back() == '\t'))
      raw.remove_suffix(1);
    if (!trim(raw).empty()) lines.emplace_back(line_no, raw);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }

  std::vector<TleRecord> out;
  std::size_t i = 0;
  while (i < lines.size()) {
    std::string name;
    if (!lines[i].second.starts_with("1 ")) {
      std::string_view nm = trim(lines[i].second);
      if (nm.starts_with("0 ")) nm.remove_prefix(2);
      name = std::string(nm);
      ++i;
      if (i >= lines.size()) throw TleParseError(lines[i - 1].first, "name line without element set");
    }
    if (i + 1 >= lines.size()) throw TleParseError(lines[i].first, "element set is missing line 2");
    const auto [n1, l1] = lines[i];
    const auto [n2, l2] = lines[i + 1];
    check_element_line(l1, '1', n1);
    check_element_line(l2, '2', n2);

    TleRecord rec;
    rec.name = name;
    rec.satellite_id = field_int(l1, 3, 5, n1, "satellite number");
    if (field_int(l2, 3, 5, n2, "satellite number") != rec.satellite_id)
      throw TleParseError(n2, "satellite number differs from line 1");

    const int yy = field_int(l1, 19, 2, n1, "epoch year");
    const double doy = field_double(l1, 21, 12, n1, "epoch day");
    if (doy < 1.0 || doy >= 367.0) throw TleParseError(n1, "epoch day out of range");
    const int year = yy < 57 ? 2000 + yy : 1900 + yy;
    rec.epoch = utc_from_calendar(year, 1, 1, 0, 0, 0.0).plus_seconds((doy - 1.0) * kSecondsPerDay);

    rec.inclination = field_double(l2, 9, 8, n2, "inclination") * kDegToRad;
    rec.raan = field_double(l2, 18, 8, n2, "RAAN") * kDegToRad;
    const std::string ecc = "0." + std::string(trim(l2.substr(26, 7)));
    rec.eccentricity = field_double(ecc, 1, ecc.size(), n2, "eccentricity");
    rec.arg_perigee = field_double(l2, 35, 8, n2, "argument of perigee") * kDegToRad;
    rec.mean_anomaly = field_double(l2, 44, 8, n2, "mean anomaly") * kDegToRad;
    rec.mean_motion = field_double(l2, 53, 11, n2, "mean motion");
    if (!(rec.eccentricity >= 0.0 && rec.eccentricity < 1.0))
      throw TleParseError(n2, "eccentricity outside [0, 1)");
    if (!(rec.mean_motion > 0.0)) throw TleParseError(n2, "mean motion must be positive");
    out.push_back(std::move(rec));
    i += 2;
  }
  return out;
}

std::vector<TleRecord> load_tle_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open TLE file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tle(ss.str());
}

std::pair<std::string, std::string> format_tle(const TleRecord& rec) {
  const double s = rec.epoch.seconds_since_j2000 + 43200.0;
  int y;
  unsigned m, d;
  civil_from_days(static_cast<long long>(std::floor(s / kSecondsPerDay)) + kJ2000Days, y, m, d);
  const UtcTime jan1 = utc_from_calendar(y, 1, 1, 0, 0, 0.0);
  const double doy = 1.0 + jan1.seconds_until(rec.epoch) / kSecondsPerDay;

  char l1[80], l2[80];
  std::snprintf(l1, sizeof l1, "1 %05dU 00000A   %02d%012.8f  .00000000  00000-0  00000-0 0  999",
                rec.satellite_id, y % 100, doy);
  long ecc = std::lround(rec.eccentricity * 1e7);
  std::snprintf(l2, sizeof l2, "2 %05d %8.4f %8.4f %07ld %8.4f %8.4f %11.8f    1",
                rec.satellite_id, rec.inclination * kRadToDeg, wrap_two_pi(rec.raan) * kRadToDeg, ecc,
                wrap_two_pi(rec.arg_perigee) * kRadToDeg, wrap_two_pi(rec.mean_anomaly) * kRadToDeg,
                rec.mean_motion);
  std::string a(l1), b(l2);
  a.resize(68, ' ');
  b.resize(68, ' ');
  a.push_back(static_cast<char>('0' + tle_checksum(a)));
  b.push_back(static_cast<char>('0' + tle_checksum(b)));
  return {a, b};
}

std::optional<double> solve_kepler(double mean_anomaly, double e, int max_iter, double tol) {
  if (!(e >= 0.0 && e < 1.0)) return std::nullopt;
  const double m = wrap_two_pi(mean_anomaly);
  double ecc_anomaly = e < 0.8 ? m : kPi;
  for (int it = 0; it < max_iter; ++it) {
    const double f = ecc_anomaly - e * std::sin(ecc_anomaly) - m;
    const double step = f / (1.0 - e * std::cos(ecc_anomaly));
    ecc_anomaly -= step;
    if (std::fabs(step) < tol) return ecc_anomaly;
  }
  double lo = m - e, hi = m + e;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = mid - e * std::sin(mid) - m;
    if (f > 0.0) hi = mid;
    else lo = mid;
    if (hi - lo < tol) return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

OrbitState KeplerPropagator::state_at(const TleRecord& rec, UtcTime t, std::size_t slot) const {
  const double n = rec.mean_motion * kTwoPi / kSecondsPerDay;
  const double a = std::cbrt(kMuEarth / (n * n));
  const double e = rec.eccentricity;
  const double dt = rec.epoch.seconds_until(t);

  double raan = rec.raan;
  double argp = rec.arg_perigee;
  const double p = a * (1.0 - e * e);
  if (j2_) {
    const double k = n * kJ2 * (kJ2RadiusKm / p) * (kJ2RadiusKm / p);
    const double ci = std::cos(rec.inclination);
    raan += -1.5 * k * ci * dt;
    argp += 0.75 * k * (5.0 * ci * ci - 1.0) * dt;
  }

  const auto ecc_anomaly = solve_kepler(rec.mean_anomaly + n * dt, e);
  if (!ecc_anomaly) throw KeplerError(rec.satellite_id, slot);
  const double ce = std::cos(*ecc_anomaly);
  const double se = std::sin(*ecc_anomaly);
  const double r = a * (1.0 - e * ce);
  const double root = std::sqrt(1.0 - e * e);
  const double nu = std::atan2(root * se, ce - e);
  const double vfac = std::sqrt(kMuEarth / p);

  const double cn = std::cos(nu), sn = std::sin(nu);
  const Vec3 r_pf{r * cn, r * sn, 0.0};
  const Vec3 v_pf{-vfac * sn, vfac * (e + cn), 0.0};

  const double co = std::cos(raan), so = std::sin(raan);
  const double cw = std::cos(argp), sw = std::sin(argp);
  const double ci = std::cos(rec.inclination), si = std::sin(rec.inclination);
  // Columns of R3(-raan) R1(-i) R3(-argp) acting on perifocal x and y.
  const Vec3 px{co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si};
  const Vec3 py{-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si};

  return {px * r_pf.x + py * r_pf.y, px * v_pf.x + py * v_pf.y, slot};
}

std::vector<OrbitState> propagate(const TleRecord& rec, const TimeGrid& grid,
                                  const Propagator& propagator) {
  grid.validate();
  if (std::fabs(rec.epoch.seconds_until(grid.t0)) > 30.0 * kSecondsPerDay) {
    std::clog << "warning: satellite " << rec.satellite_id << " element epoch "
              << format_iso8601(rec.epoch) << " is more than 30 days from grid start "
              << format_iso8601(grid.t0) << "\n";
  }
  std::vector<OrbitState> out;
  out.reserve(grid.num_slots);
  for (std::size_t s = 0; s < grid.num_slots; ++s)
    out.push_back(propagator.state_at(rec, grid.time_at(s), s));
  return out;
}

std::vector<OrbitState> propagate(const TleRecord& rec, const TimeGrid& grid) {
  return propagate(rec, grid, KeplerPropagator{});
}

GroundSite GroundSite::from_degrees(double lat_deg, double lon_deg, double altitude_km) {
  if (!(std::fabs(lat_deg) <= 90.0)) throw std::invalid_argument("latitude outside [-90, 90] degrees");
  if (!std::isfinite(lon_deg)) throw std::invalid_argument("longitude is not finite");
  double lon = std::fmod(lon_deg + 180.0, 360.0);
  if (lon < 0.0) lon += 360.0;
  return {lat_deg * kDegToRad, (lon - 180.0) * kDegToRad, altitude_km};
}

Vec3 ground_site_ecef(const GroundSite& site, double earth_radius_km) {
  const double r = earth_radius_km + site.altitude_km;
  const double cl = std::cos(site.latitude);
  return {r * cl * std::cos(site.longitude), r * cl * std::sin(site.longitude),
          r * std::sin(site.latitude)};
}

Vec3 ecef_to_eci(const Vec3& ecef, UtcTime t) { return rotate_z(ecef, gmst(t)); }
Vec3 eci_to_ecef(const Vec3& eci, UtcTime t) { return rotate_z(eci, -gmst(t)); }

Vec3 ground_site_eci(const GroundSite& site, const TimeGrid& grid, std::size_t slot,
                     double earth_radius_km) {
  if (slot >= grid.num_slots) throw std::out_of_range("slot outside time grid");
  return ecef_to_eci(ground_site_ecef(site, earth_radius_km), grid.time_at(slot));
}

}  // namespace leosim
