//! From a map of communities to couplings: Gaussian overlap, target rate and
//! the inverted sinc law.

use thermal_epidemic::calibration::gamma_from_sar;
use thermal_epidemic::geometry::{gaussian_overlap, site_infection_rate, CommunityMap, SusceptibleSite};
use thermal_epidemic::{ContactProfile, Region, SiteKind};

fn main() -> thermal_epidemic::Result<()> {
    let rect = |id, r, population| SusceptibleSite {
        id,
        kind: SiteKind::Community,
        region: Region::Rect(r),
        population,
    };
    let map = CommunityMap {
        index_patients: vec![(0, [0.0, 0.0])],
        sites: vec![
            SusceptibleSite {
                id: 1,
                kind: SiteKind::Household,
                region: Region::Point([0.0, 0.0]),
                population: 4.0,
            },
            rect(2, [20.0, -50.0, 110.0, 50.0], 50.0),
            rect(3, [-130.0, 30.0, -40.0, 120.0], 65.0),
            rect(4, [-90.0, -180.0, 50.0, -80.0], 95.0),
        ],
    };
    let sigma = 65.0;
    let profile = ContactProfile::new(sigma, gamma_from_sar(0.251, 7.0)?)?;
    let gamma = map.couplings(sigma, 1.0)?;
    println!("site  overlap   rate      gamma");
    for (j, site) in map.sites.iter().enumerate() {
        let overlap = gaussian_overlap(&site.region, [0.0, 0.0], sigma)?;
        let rate = site_infection_rate(&profile, &site.region, [0.0, 0.0])?;
        println!("{:>4}  {overlap:.5}   {rate:.6}  {:.4}", site.id, gamma[0][j]);
    }
    Ok(())
}
