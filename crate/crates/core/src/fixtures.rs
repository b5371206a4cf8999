//! Small built-in web corpus used by the `stub` search and page backends.

const PAGES: &[(&str, &str)] = &[
    (
        "stub://energy/solar",
        "<html><head><title>Solar power</title><script>track()</script></head><body>\
<h1>Solar power</h1>\
<p>Solar panels convert sunlight directly into electricity using photovoltaic cells made of silicon.</p>\
<p>Solar power produces no emissions while operating, which makes it one of the cleanest sources of energy available today.</p>\
<p>Panels are less productive on cloudy days and produce nothing at night, so storage or backup generation is needed.</p>\
</body></html>",
    ),
    (
        "stub://energy/wind",
        "<html><body><h1>Wind energy</h1>\
<p>Wind turbines generate power when moving air spins their blades, which turn a generator inside the nacelle.</p>\
<p>Offshore wind farms benefit from stronger and steadier winds than turbines built on land.</p>\
<div>Wind output varies with the weather, so grids balance it with other sources and with storage.</div>\
</body></html>",
    ),
    (
        "stub://energy/storage",
        "<html><body>\
<p>Batteries store surplus electricity from solar and wind farms and release it when demand is high.</p>\
<p>Pumped hydro storage moves water uphill when power is cheap and lets it flow back through turbines later.</p>\
</body></html>",
    ),
    (
        "stub://energy/coal",
        "<html><body>\
<p>Coal power plants burn coal to boil water, and the steam drives turbines that generate electricity.</p>\
<p>Burning coal releases carbon dioxide and other pollutants, which is why many countries are phasing it out.</p>\
</body></html>",
    ),
    (
        "stub://science/sky",
        "<html><body>\
<p>The sky looks blue because air molecules scatter short blue wavelengths of sunlight more than red ones.</p>\
<p>At sunset light travels through more air, so most blue light is scattered away and the sky turns red and orange.</p>\
</body></html>",
    ),
    (
        "stub://misc/capitals",
        "<html><body>\
<p>Some capital cities were chosen because they sat in the geographic center of their state or country.</p>\
<p>Other capitals were picked because they were centers of trade and transportation at the time.</p>\
</body></html>",
    ),
];

pub fn builtin_pages() -> Vec<(String, String)> {
    PAGES
        .iter()
        .map(|(u, b)| (u.to_string(), b.to_string()))
        .collect()
}

pub fn builtin_urls() -> Vec<String> {
    PAGES.iter().map(|(u, _)| u.to_string()).collect()
}

/// Questions the built-in corpus can answer.
pub const QUESTIONS: &[&str] = &[
    "How do solar panels generate electricity?",
    "Why is the sky blue?",
    "How do wind turbines make power?",
    "How is surplus renewable energy stored?",
    "Why are countries phasing out coal power?",
    "Why does the sky turn red at sunset?",
    "How were capital cities chosen?",
    "Do solar panels work at night?",
    "Why are offshore wind farms built?",
    "How does pumped hydro storage work?",
];
