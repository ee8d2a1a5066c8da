// Generated by tools/gen_direction_table.cpp. Do not edit.
#include "dmriqc/phantom.hpp"

#include <algorithm>

namespace dmriqc {

namespace {

constexpr std::size_t kCounts[] = {6, 12, 15, 20, 30, 32, 45, 60, 64};

constexpr double kDirs6[][3] = {
    {0.58574937388134174, 0.011059924808212515, 0.8104167749132869},
    {-0.4259074169672683, 0.29403559059957451, 0.85565527149257292},
    {-0.16823122539688001, -0.71066104161730792, 0.68312454115546695},
    {0.26702217408887535, 0.89921785792941522, 0.34656370630186373},
    {-0.95294871605386777, -0.26854964022473388, 0.14060524636887195},
    {0.68394934102422589, -0.7264089538045394, 0.067404233881276171},
};

constexpr double kDirs12[][3] = {
    {0.37678520598991588, -0.042141718760055437, 0.92534154996254503},
    {-0.29294327048738772, 0.16613969823873159, 0.94158474974125217},
    {-0.074493047269034524, -0.59067558118050401, 0.80346321863894132},
    {0.44302593602571749, 0.60406988903510717, 0.66244063067542158},
    {-0.81583854575363401, -0.1034405804892274, 0.56895299768139662},
    {0.81518028713385027, -0.30615011298748995, 0.49168405280842792},
    {-0.32773109674094908, 0.7596374772754716, 0.56173234849662379},
    {-0.59638518946445351, -0.72395329316703172, 0.34672227372936104},
    {0.92612949290570235, 0.33095651691971589, 0.1809749879917012},
    {-0.85761114842679986, 0.47855912106726189, 0.1883727308752392},
    {0.38792661532985157, -0.86956376486676468, 0.30556799562366366},
    {0.1781153602106183, 0.97763049205785091, 0.1118639327744483},
};

constexpr double kDirs15[][3] = {
    {0.36426767648175207, 0.0074153730299139206, 0.93126477014510378},
    {-0.26251728491430704, 0.24969219543343049, 0.93206141571296375},
    {-0.006236174856215148, -0.50575181331600694, 0.86265648635521996},
    {0.25376062590914666, 0.62452768071963893, 0.73862759273746803},
    {-0.64424141763453491, -0.24139725857001088, 0.72572746906750629},
    {0.64462955926131293, -0.46499384631117674, 0.60682242395885733},
    {-0.26397206589506939, 0.85328847165686006, 0.44968603776922994},
    {-0.41765987649277925, -0.79054451572242146, 0.44788346277713648},
    {0.79703546163866146, 0.31314452350347532, 0.51640582906298349},
    {-0.77812844637826273, 0.34770875931715822, 0.52308196263212292},
    {0.17078741635231379, -0.94343394071559439, 0.28419017914337846},
    {0.40238515811202424, 0.8965039668253395, 0.18538290643312241},
    {-0.88211904007118025, -0.45328914556620753, 0.12804276494889083},
    {0.98664259162801771, -0.13959351232951611, 0.083964562173919219},
    {0.69193295969309665, -0.72187909723216825, 0.010924663364217555},
};

constexpr double kDirs20[][3] = {
    {0.3413742418168646, 0.039633444229754226, 0.93909148495897232},
    {-0.19769373936500012, 0.23848940125642606, 0.9508101760626223},
    {-0.0028051497162751441, -0.38833089326307324, 0.92151573425122413},
    {0.30950183107847928, 0.55452505973727295, 0.77247043612195443},
    {-0.58154336247291316, -0.20557764549595883, 0.78711190388408925},
    {0.57961145879702591, -0.40486393353066846, 0.70720276594287879},
    {-0.26100120928834891, 0.74195486466349692, 0.61756080474087061},
    {-0.35995208331647238, -0.69219495126590769, 0.62554028420088115},
    {0.78078975858375466, 0.19627082460187825, 0.59316533639519164},
    {-0.68914363022381808, 0.30469102638154599, 0.65745299099212995},
    {0.16909846084769825, -0.8456071698426858, 0.50631435378584977},
    {0.29096810118965472, 0.88028665940810569, 0.37474386100135715},
    {-0.80837174286319491, -0.50253319621072656, 0.30658687520269368},
    {0.95011552929966703, -0.18935899304910961, 0.24783795660681393},
    {-0.7439983118154333, 0.62222070938365182, 0.24353213510723901},
    {-0.35955749080075239, -0.92262778177032978, 0.13955782713494608},
    {0.79318070676041763, 0.56698791369918611, 0.22223652297066035},
    {-0.97094638560121882, 0.0030687547982590291, 0.23927745199227912},
    {0.6557684580645009, -0.70862737048510427, 0.26041309338640012},
    {-0.2268281931255782, 0.97065944590703113, 0.079807335971329052},
};

constexpr double kDirs30[][3] = {
    {0.23314181668940509, 0.011786907484931023, 0.97237130877186284},
    {-0.20903244285497471, 0.057121124564228722, 0.97623901528396195},
    {-0.029176109554076506, -0.39994713765503626, 0.91607370975966351},
    {0.32866778555940529, 0.45122674441884536, 0.82968181362293758},
    {-0.58576394467335724, -0.12036286019034549, 0.80149446848216466},
    {0.50060932554250326, -0.33092418490275743, 0.79992467584537341},
    {-0.1133465333825746, 0.51223909730285899, 0.85133052956211153},
    {-0.44008247244258092, -0.52818672493133467, 0.72618606503783578},
    {0.6594171353316759, 0.12303247390011518, 0.74164145784670366},
    {-0.54980171288508128, 0.3599626662063366, 0.75375390907527395},
    {0.28736250489627635, -0.68655184210892817, 0.66788424062600482},
    {0.16852615378004476, 0.81143985640808736, 0.55961084239364689},
    {-0.81864331729541462, -0.37985560031166865, 0.43073523417456949},
    {0.84384452037841651, -0.24642550235918728, 0.47665595266852828},
    {-0.36612825383366943, 0.76119589571501811, 0.53528582093244303},
    {-0.13375557160252038, -0.81326700336975577, 0.56630930443995053},
    {0.65208209424859598, 0.56510362835048067, 0.50541748246918339},
    {-0.87081930707026933, 0.097935739230656946, 0.48174923499160904},
    {0.66509438559911771, -0.65415184871537413, 0.36018719725552489},
    {-0.10767241017419617, 0.96923088047314376, 0.22135526292486091},
    {-0.57227285701953945, -0.76216137262563666, 0.30267774810200271},
    {0.91874457140644938, 0.19173622067874127, 0.34517478788435968},
    {-0.77004871315416556, 0.52816362610024903, 0.35786612501639486},
    {0.26534551022452774, -0.92956466871963683, 0.25593219194121891},
    {0.47705772779442285, 0.85550519402586489, 0.20131266067088235},
    {-0.99390394550391725, -0.07624469584677554, 0.079634750373056701},
    {0.92707590029988196, -0.37275311241978609, 0.039816984623721609},
    {-0.57377691260737929, 0.81551329286639063, 0.075618276342169069},
    {-0.18958286596778784, -0.97377999981149566, 0.12574119809578549},
    {0.83463135588780435, 0.54971819725025173, 0.034646837962775172},
};

constexpr double kDirs32[][3] = {
    {0.22801792382458269, -0.02357591114384391, 0.97337146189338442},
    {-0.19154468720268056, 0.19385284543141007, 0.96214952430616152},
    {-0.089712898917887363, -0.30929639548819948, 0.94672452989544775},
    {0.24189554372415625, 0.40878014682878244, 0.87999166898615233},
    {-0.51034185397226139, -0.11239152181911048, 0.85259564736593596},
    {0.46552724075131352, -0.35477070256382442, 0.81081572303504257},
    {-0.14663995833841553, 0.62506321591983394, 0.76667639765579243},
    {-0.35508950460099692, -0.5830448853279957, 0.73073258132854801},
    {0.61754270835118308, 0.13779051451599697, 0.77437379699451503},
    {-0.55998323801449634, 0.37220772906564364, 0.7401892863089794},
    {0.1474075860774598, -0.6588236211544477, 0.73771433480430426},
    {0.3640296934288102, 0.70846660964672459, 0.60461346769469348},
    {-0.71589314662936432, -0.42051110058338947, 0.55737547209691063},
    {0.81428840532048985, -0.18491542610629591, 0.55021875481352023},
    {-0.46956724737842553, 0.75025021872866782, 0.46543657944668954},
    {-0.17339285155916037, -0.87056930933264054, 0.46048235218765116},
    {0.72276178350996223, 0.46257814844994338, 0.51345580225966947},
    {-0.83076412736367478, 0.04711554064920763, 0.55462698321935722},
    {0.60519578003502739, -0.63373020618389719, 0.4817925835854156},
    {0.011315689848093774, 0.90389433820330889, 0.42760610440832558},
    {-0.58207740084562942, -0.76569070499409986, 0.27368530050120526},
    {0.95139604291394486, 0.13962036993316662, 0.27450268091115848},
    {-0.8102946737697303, 0.47933094585443953, 0.33714149256164644},
    {0.27447938785046588, -0.8964132171404241, 0.34800058876557749},
    {0.47856548510054381, 0.85526730779845339, 0.19872822819535904},
    {-0.92972596310471667, -0.30647342294501201, 0.20416580163527584},
    {0.89304197634053961, -0.41250131825370134, 0.17977399960155979},
    {-0.28427389049560214, 0.9538548926650553, 0.096691255661669653},
    {-0.14748331748662044, -0.98812902573588013, 0.043008133665636029},
    {0.80715456751040815, 0.58304565673030684, 0.09251630296878019},
    {-0.98626765189797205, 0.11699322729645882, 0.11657059486174026},
    {0.65823269447361754, -0.7526781922116359, 0.014326859217044564},
};

constexpr double kDirs45[][3] = {
    {0.15498797959657595, -0.033924452606279423, 0.98733371141470483},
    {-0.13714655515053978, 0.17138418082851892, 0.97561174909493453},
    {-0.0041001238293222504, -0.35916972366257333, 0.93326325256528497},
    {0.240204767192114, 0.35937840482011851, 0.90174765426206094},
    {-0.39125167316978626, -0.084435870325465401, 0.91640204716282914},
    {0.39083466305485992, -0.32308830864556737, 0.86189454747743988},
    {-0.090679769615911343, 0.53365046871509836, 0.84082956455072455},
    {-0.33746194370795779, -0.43922764259306751, 0.83258543977839516},
    {0.50635506573612232, 0.085346183313058335, 0.85809124013548888},
    {-0.46921937956945747, 0.30771457751364639, 0.82773480814935618},
    {0.24284020330107944, -0.64380067058919621, 0.72563719048129816},
    {0.25278548178103716, 0.69354982447167712, 0.67460220958431116},
    {-0.66607648572928069, -0.30457027907644391, 0.6808664041218575},
    {0.70870777001047958, -0.1960271137171575, 0.67772167400378569},
    {-0.38939909759481722, 0.65229578321352943, 0.65029113018262075},
    {-0.11975791083082009, -0.71534798154384749, 0.68842959559753136},
    {0.56947395316150551, 0.45170443162745305, 0.68677690927893542},
    {-0.7253419063632468, 0.062537969860416043, 0.68554220964071111},
    {0.61448918519397577, -0.54196132488245696, 0.57330704130622345},
    {-0.068657530560179106, 0.8343919776856904, 0.54687857068195711},
    {-0.5230598088829056, -0.64262215527881905, 0.5598617703292339},
    {0.79973847115229135, 0.14535463786003236, 0.58248640070955704},
    {-0.69982657371464962, 0.47193434631722253, 0.53620960406258111},
    {0.088139022962579777, -0.90681279656655001, 0.41221604118999872},
    {0.53222881810250522, 0.73910905904309909, 0.4128562510385847},
    {-0.88310053804520394, -0.24591890612655354, 0.39957143455681432},
    {0.87933517144369588, -0.31228464345018336, 0.3595107199059272},
    {-0.48699591548134202, 0.81079135405735436, 0.3247342890585031},
    {-0.31276307663311304, -0.87367365566710087, 0.37265748521702052},
    {0.81997407654569876, 0.4454582107139799, 0.35945722457690027},
    {-0.90008229223125746, 0.20558159633129997, 0.38417193346417144},
    {0.43064526820787163, -0.80853682648810099, 0.40101477925722501},
    {0.23127300453933294, 0.92847593486250035, 0.29059462443850514},
    {-0.73668034387289705, -0.61463549880253965, 0.28200225985453303},
    {0.96423834066756198, 0.051168928846237756, 0.26005030880080787},
    {-0.76313896937425696, 0.61966325002140865, 0.18340220826179279},
    {-0.045136156552707953, -0.99526441909860552, 0.086089856823931901},
    {0.71194266083523716, 0.69732562205853166, 0.08291335539902088},
    {-0.9937291636423905, -0.022097612976987421, 0.10960859832747864},
    {0.73100338263206288, -0.65540677132707414, 0.1899368807764894},
    {-0.15932326350357298, 0.96509955643989909, 0.20784355622939354},
    {-0.44018693579124796, -0.89718086755000415, 0.036082578357623511},
    {-0.9246478790694469, -0.38059646484680454, 0.013138899439781348},
    {-0.93954319036275347, 0.3423901385431089, 0.005252282495222014},
    {0.42759418192455112, -0.90249287232965314, 0.051670407182895957},
};

constexpr double kDirs60[][3] = {
    {0.16148209019341203, 0.035017582612459991, 0.98625417791497672},
    {-0.14016720989909826, 0.12553400269662168, 0.9821376519796331},
    {-0.016629873383233337, -0.24594313654875591, 0.9691415897049398},
    {0.21174867646813608, 0.34499086948486524, 0.91440898835590489},
    {-0.36301115161569442, -0.11026106931503585, 0.92523802364372842},
    {0.34621332151796347, -0.21669068846121614, 0.91278775273209234},
    {-0.10256949201694582, 0.44459104987035508, 0.88984172619773305},
    {-0.26614674303418212, -0.41923151844005907, 0.86799242227034423},
    {0.4790205926752486, 0.11812405320451559, 0.86981950992581802},
    {-0.43588036532755481, 0.23339269472034316, 0.86921582887858995},
    {0.17133301889956423, -0.5108433046626536, 0.84242751303367391},
    {0.2102949454448674, 0.62497319482814284, 0.75178756418728065},
    {-0.57905232553509911, -0.33008636406309005, 0.74548064800637381},
    {0.64863311854254102, -0.14893614995664892, 0.74638669653596357},
    {-0.39540435284085718, 0.52978454667829078, 0.7503224186010844},
    {-0.088194287527688653, -0.66050990087526651, 0.74561949980752851},
    {0.50886482982205317, 0.43593339266186432, 0.74230631287393078},
    {-0.64689569818862891, 0.010403197190831107, 0.76250752727645588},
    {0.4809706162972095, -0.46191582554918736, 0.74518523627746092},
    {-0.10290654003491716, 0.72326300275834277, 0.68286226492538549},
    {-0.4232191195810085, -0.6312748960807838, 0.64990582579268497},
    {0.73489128189299835, 0.18209577651156295, 0.65328089821631619},
    {-0.6637940267507445, 0.39296879105112215, 0.63635919048117129},
    {0.18318314968332669, -0.78324271907014209, 0.5941168039162894},
    {0.46532177595729063, 0.7076776742350378, 0.53166526518970625},
    {-0.8165031104321121, -0.21865272665418969, 0.53433477874959123},
    {0.7399863835307231, -0.41179815878186121, 0.53182932282170237},
    {-0.39876126303708387, 0.74996277926017008, 0.52777389555133458},
    {-0.18020341668655823, -0.84932252914028283, 0.49616324945449569},
    {0.72792920881027856, 0.49025841916047547, 0.47933886698567824},
    {-0.84098268297674861, 0.11871686350636905, 0.52787728995708816},
    {0.48523340048684765, -0.69087739543411641, 0.53594493330018711},
    {0.14973639522900625, 0.85343409257886216, 0.49922866661272292},
    {-0.69550965337830473, -0.53881167978035704, 0.47534018953783025},
    {0.86615045252397094, -0.10006951809609736, 0.48966262379370473},
    {-0.66543241890227367, 0.64956948915978863, 0.3677759842982683},
    {0.081133429650624159, -0.94772556743002612, 0.3085994417243208},
    {0.64841529333383296, 0.72325213438205926, 0.23762145837991003},
    {-0.96421372736509914, -0.03468589217133599, 0.26284744024810464},
    {0.70665081601609014, -0.64708811014337908, 0.28621949957133241},
    {-0.13362456127423522, 0.9229353163636298, 0.36101922169468342},
    {-0.4924785804362864, -0.79273037875416819, 0.35922610485839346},
    {0.90336148714279518, 0.23019755009286705, 0.36186615133001826},
    {-0.85296046271361592, 0.38673474059480467, 0.35056338865381176},
    {0.40375459142974035, -0.87128149754432327, 0.27901752980113076},
    {0.35008920758294371, 0.90188394575680619, 0.25306697753772767},
    {-0.88930593448939677, -0.38643916481582691, 0.24453982656898102},
    {0.89701246647061694, -0.37830860468677019, 0.22858528958848062},
    {-0.43526044198195279, 0.87114472707558666, 0.227277830274043},
    {-0.22240194503523811, -0.95916217115472613, 0.17477214958423726},
    {0.85768005103527145, 0.49615414036059097, 0.13496665906503436},
    {-0.96656052625348166, 0.24090285563388458, 0.087900871645465325},
    {0.60312083979207565, -0.79747613776873427, 0.016645188432826859},
    {0.073850250268891249, 0.99144787536948609, 0.10759763454906547},
    {-0.73872139749520405, -0.66021762105055115, 0.13565909382375893},
    {0.98149895057051662, -0.058954714780337571, 0.182165176787836},
    {-0.82207902543555611, 0.5664455445093135, 0.05766733082494762},
    {0.22912336300665928, -0.97336342211039828, 0.0081322212250499997},
    {-0.50035433522903805, -0.86523947370785093, 0.031720535229859903},
    {0.97688701969887815, 0.21311842178203863, 0.016501183017502377},
};

constexpr double kDirs64[][3] = {
    {0.19964293530680624, -0.017106282931701498, 0.9797193850620407},
    {-0.092378444418197689, 0.13622352898573395, 0.9863616847574459},
    {-0.027105041133439724, -0.22345168306898142, 0.97433806354816799},
    {0.21489633530152386, 0.29218670694651339, 0.93190476624906671},
    {-0.32673240180659052, -0.069309535117703297, 0.94257207997662695},
    {0.36280455989532362, -0.25759904247563448, 0.89555322825323824},
    {-0.13456453674155044, 0.43040478067622107, 0.8925492200560069},
    {-0.22663768424494257, -0.43108298134236106, 0.87338583872024811},
    {0.48080776037096518, 0.1096567447548179, 0.86994212215344158},
    {-0.41882721804792605, 0.23192814928562885, 0.87794823024548441},
    {0.13354468667485736, -0.48994492246982096, 0.86146374828367278},
    {0.16573087893759386, 0.55747948035972184, 0.81348011945248366},
    {-0.51594529481250051, -0.2623986744894215, 0.81544306262732802},
    {0.6377587839236275, -0.1704467438229349, 0.75114022728676633},
    {-0.38378729283503621, 0.55809978406767058, 0.73568467761804968},
    {-0.10008838937591098, -0.68386707288707871, 0.72270889086339263},
    {0.48584826254883479, 0.44495056549683343, 0.75231008237449992},
    {-0.65803214497519691, 0.019109916551015481, 0.75274730638425702},
    {0.4752872419797472, -0.49494310169168793, 0.72741553715816165},
    {-0.083123433477171368, 0.71288962143322199, 0.6963324511034682},
    {-0.45543960091270463, -0.56198899271534475, 0.69046588763476846},
    {0.71638918119680084, 0.15444011228382648, 0.68039311635402111},
    {-0.63333498289751555, 0.36863766429469114, 0.68043594254092588},
    {0.24780827612862072, -0.71555957601861264, 0.65311985994166866},
    {0.29893122530032951, 0.7317771093845038, 0.61248868130056378},
    {-0.72368142849689554, -0.33492848664743419, 0.60341370458480015},
    {0.73731645655396261, -0.39987473222945058, 0.54448566686289701},
    {-0.32835660169291658, 0.79700950129982073, 0.50691004819641383},
    {-0.34151722488629616, -0.78823642827004214, 0.5119075290069971},
    {0.73426963069351348, 0.41618252773091124, 0.53632099814637213},
    {-0.82911054222811209, 0.19959083368506964, 0.52224439477614792},
    {0.55623901367189288, -0.68164488766174358, 0.47535082496397185},
    {0.038654701105514042, 0.88724080616799716, 0.45968420241814478},
    {-0.65661136652125129, -0.61339882408776891, 0.43886603418678616},
    {0.85846749383099563, -0.066262663788473786, 0.50856938702913035},
    {-0.61017684762442315, 0.63139556166251976, 0.47856437324146128},
    {0.010252154259071704, -0.87296395446419983, 0.48767697048279279},
    {0.57013340422161884, 0.6747912395255482, 0.4686199787143549},
    {-0.87211713469322905, -0.097283137067542769, 0.47952861709888617},
    {0.78392391651587245, -0.56719399533796988, 0.25249606881487596},
    {-0.20574609594862306, 0.94475785761645958, 0.25514923961058084},
    {-0.5448178576142978, -0.80767089672134618, 0.22547998716937909},
    {0.91435932397258224, 0.20523971628157661, 0.34903249923905422},
    {-0.82286946172153586, 0.45964052861488436, 0.33409045694353423},
    {0.32071069425343968, -0.87428851956928977, 0.36436826857016058},
    {0.33975719144074967, 0.88200098949507988, 0.32655674146156233},
    {-0.86617412089387691, -0.39921810740645297, 0.30061153506232802},
    {0.91751860083833259, -0.2709301221963647, 0.29112967214341379},
    {-0.52733092731438491, 0.81933642012368635, 0.22496649474233579},
    {-0.2212996787662844, -0.93874610321499619, 0.264163218250761},
    {0.80411228851038263, 0.53946239704931298, 0.24976739105897042},
    {-0.96090883703927232, 0.17130688617567819, 0.21750438535493111},
    {0.58587625189710235, -0.79565449106868869, 0.15389265188835149},
    {0.075560135167060796, 0.98961993747619925, 0.12224174950948156},
    {-0.77988576983621516, -0.61942924993649195, 0.089919910643243825},
    {0.99244969320673537, -0.020413889807465554, 0.12094163698571894},
    {-0.75316443916808795, 0.65176652788629363, 0.089127552976982563},
    {0.07094750400981685, -0.98413095562188357, 0.1626429028932265},
    {0.61383202955365379, 0.77641307473935506, 0.14280398057415317},
    {-0.9776205291970016, -0.1273313883410607, 0.16746587245081493},
    {-0.92307616454735186, 0.38461341688788692, 0.001707042581473366},
    {0.34439393692318254, -0.93850483948807062, 0.024525139510750509},
    {0.3665278356984496, 0.93034757279091185, 0.010523281820295178},
    {0.93826140452529827, 0.34217189754504285, 0.050832364775204489},
};

template <std::size_t N> auto to_vec(const double (&t)[N][3]) -> std::vector<Vec3> {
  std::vector<Vec3> out;
  out.reserve(N);
  for (const auto &r : t) out.push_back({r[0], r[1], r[2]});
  return out;
}

} // namespace

auto shipped_direction_counts() -> std::span<const std::size_t> { return kCounts; }

auto shipped_directions(std::size_t count) -> std::vector<Vec3> {
  switch (count) {
  case 6: return to_vec(kDirs6);
  case 12: return to_vec(kDirs12);
  case 15: return to_vec(kDirs15);
  case 20: return to_vec(kDirs20);
  case 30: return to_vec(kDirs30);
  case 32: return to_vec(kDirs32);
  case 45: return to_vec(kDirs45);
  case 60: return to_vec(kDirs60);
  case 64: return to_vec(kDirs64);
  default: return {};
  }
}

} // namespace dmriqc
