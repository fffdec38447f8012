"""Fully symmetric positive-weight cubature rules on the reference triangle.

Generated by tools/generate_triangle_rules.py; maps degree -> (points, weights).
"""

TRIANGLE_RULES = {
    1: (
        [[-0.3333333333333333, -0.3333333333333333]],
        [2.0],
    ),
    2: (
        [[-0.6666666666666667, 0.3333333333333334],
         [0.3333333333333335, -0.6666666666666667],
         [-0.6666666666666667, -0.6666666666666667]],
        [0.6666666666666666,
         0.6666666666666666,
         0.6666666666666666],
    ),
    3: (
        [[-0.746506355691013, 0.493012711382026],
         [0.49301271138202596, -0.746506355691013],
         [-0.746506355691013, -0.746506355691013],
         [-0.10727038410432588, -0.7854592317913482],
         [-0.7854592317913482, -0.10727038410432588],
         [-0.10727038410432588, -0.10727038410432588]],
        [0.3344643071154245,
         0.3344643071154245,
         0.3344643071154245,
         0.3322023595512421,
         0.3322023595512421,
         0.3322023595512421],
    ),
    4: (
        [[-0.10810301816807022, -0.7837939636638596],
         [-0.7837939636638596, -0.10810301816807022],
         [-0.10810301816807022, -0.10810301816807022],
         [-0.8168475729804585, 0.633695145960917],
         [0.633695145960917, -0.8168475729804585],
         [-0.8168475729804585, -0.8168475729804585]],
        [0.44676317935602294,
         0.44676317935602294,
         0.44676317935602294,
         0.21990348731064374,
         0.21990348731064374,
         0.21990348731064374],
    ),
    5: (
        [[-0.3333333333333333, -0.3333333333333333],
         [-0.7974269853530873, 0.5948539707061746],
         [0.5948539707061746, -0.7974269853530873],
         [-0.7974269853530873, -0.7974269853530873],
         [-0.05971587178976978, -0.8805682564204604],
         [-0.8805682564204604, -0.05971587178976984],
         [-0.05971587178976978, -0.05971587178976984]],
        [0.45,
         0.2518783610896543,
         0.2518783610896543,
         0.2518783610896543,
         0.2647883055770124,
         0.2647883055770124,
         0.2647883055770124],
    ),
    6: (
        [[-0.8738219710169955, 0.7476439420339911],
         [0.7476439420339911, -0.8738219710169957],
         [-0.8738219710169954, -0.8738219710169957],
         [-0.5014265096581791, 0.002853019316358285],
         [0.002853019316358285, -0.5014265096581791],
         [-0.5014265096581791, -0.5014265096581791],
         [-0.8937099003103661, 0.27300499824279734],
         [0.27300499824279734, -0.8937099003103661],
         [-0.3792950979324312, 0.27300499824279734],
         [0.27300499824279734, -0.3792950979324312],
         [-0.3792950979324312, -0.8937099003103661],
         [-0.8937099003103661, -0.3792950979324312]],
        [0.10168981274041364,
         0.10168981274041364,
         0.10168981274041364,
         0.23357255145275874,
         0.23357255145275874,
         0.23357255145275874,
         0.16570215123674714,
         0.16570215123674714,
         0.16570215123674714,
         0.16570215123674714,
         0.16570215123674714,
         0.16570215123674714],
    ),
    7: (
        [[-0.8737103392764192, 0.7474206785528383],
         [0.7474206785528383, -0.8737103392764192],
         [-0.8737103392764192, -0.8737103392764192],
         [-0.18441668321101656, -0.6311666335779669],
         [-0.6311666335779669, -0.18441668321101656],
         [-0.18441668321101656, -0.18441668321101656],
         [-0.5802382762651149, 0.16047655253022985],
         [0.16047655253022985, -0.5802382762651148],
         [-0.5802382762651149, -0.5802382762651148],
         [-0.3742229700378197, -0.9222029629757473],
         [-0.9222029629757473, -0.3742229700378197],
         [0.296425933013567, -0.9222029629757473],
         [-0.9222029629757473, 0.296425933013567],
         [0.296425933013567, -0.3742229700378197],
         [-0.3742229700378197, 0.296425933013567]],
        [0.10071423326919765,
         0.10071423326919765,
         0.10071423326919765,
         0.150694774148036,
         0.150694774148036,
         0.150694774148036,
         0.16200929835019248,
         0.16200929835019248,
         0.16200929835019248,
         0.12662418044962026,
         0.12662418044962026,
         0.12662418044962026,
         0.12662418044962026,
         0.12662418044962026,
         0.12662418044962026],
    ),
    8: (
        [[-0.3333333333333333, -0.3333333333333333],
         [-0.08141482341455364, -0.8371703531708927],
         [-0.8371703531708927, -0.08141482341455358],
         [-0.08141482341455364, -0.08141482341455358],
         [-0.8989055433659381, 0.7978110867318762],
         [0.7978110867318762, -0.8989055433659381],
         [-0.8989055433659381, -0.8989055433659381],
         [-0.6588613844964796, 0.31772276899295915],
         [0.31772276899295915, -0.6588613844964795],
         [-0.6588613844964796, -0.6588613844964795],
         [0.4569847859108085, -0.9832104451800847],
         [-0.9832104451800847, 0.4569847859108085],
         [-0.4737743407307238, -0.9832104451800847],
         [-0.9832104451800847, -0.4737743407307238],
         [-0.4737743407307238, 0.4569847859108085],
         [0.4569847859108085, -0.4737743407307238]],
        [0.28863121535557434,
         0.19018326853456924,
         0.19018326853456924,
         0.19018326853456924,
         0.06491699524639616,
         0.06491699524639616,
         0.06491699524639616,
         0.2064347410694365,
         0.2064347410694365,
         0.2064347410694365,
         0.054460628348869985,
         0.054460628348869985,
         0.054460628348869985,
         0.054460628348869985,
         0.054460628348869985,
         0.054460628348869985],
    ),
    9: (
        [[-0.3333333333333333, -0.3333333333333333],
         [-0.02063496160252476, -0.9587300767949505],
         [-0.9587300767949505, -0.02063496160252476],
         [-0.02063496160252476, -0.02063496160252476],
         [-0.9105409732110946, 0.8210819464221892],
         [0.8210819464221891, -0.9105409732110946],
         [-0.9105409732110946, -0.9105409732110946],
         [-0.12582081701412673, -0.7483583659717465],
         [-0.7483583659717465, -0.12582081701412667],
         [-0.12582081701412673, -0.12582081701412667],
         [-0.6235929287619346, 0.24718585752386918],
         [0.2471858575238692, -0.6235929287619346],
         [-0.6235929287619346, -0.6235929287619346],
         [0.482397197568996, -0.9263231758905275],
         [-0.9263231758905275, 0.482397197568996],
         [-0.5560740216784685, -0.9263231758905275],
         [-0.9263231758905275, -0.5560740216784685],
         [-0.5560740216784685, 0.482397197568996],
         [0.482397197568996, -0.5560740216784685]],
        [0.19427159256559767,
         0.06266940045427814,
         0.06266940045427814,
         0.06266940045427814,
         0.05115535131739606,
         0.05115535131739606,
         0.05115535131739606,
         0.15565508200954856,
         0.15565508200954856,
         0.15565508200954856,
         0.1592954778544205,
         0.1592954778544205,
         0.1592954778544205,
         0.08656707875457875,
         0.08656707875457875,
         0.08656707875457875,
         0.08656707875457875,
         0.08656707875457875,
         0.08656707875457875],
    ),
    10: (
        [[-0.3333333333333333, -0.3333333333333333],
         [-0.6741737642518104, 0.3483475285036209],
         [0.34834752850362083, -0.6741737642518104],
         [-0.6741737642518104, -0.6741737642518104],
         [-0.9429929994232243, 0.8859859988464487],
         [0.8859859988464486, -0.9429929994232243],
         [-0.9429929994232243, -0.9429929994232243],
         [0.21465955700170003, -0.941384790990841],
         [-0.941384790990841, 0.21465955700170003],
         [-0.273274766010859, -0.941384790990841],
         [-0.941384790990841, -0.273274766010859],
         [-0.273274766010859, 0.21465955700170003],
         [0.21465955700170003, -0.273274766010859],
         [-0.9326286026387793, -0.6933938896608773],
         [-0.6933938896608772, -0.9326286026387794],
         [0.6260224922996567, -0.6933938896608773],
         [-0.6933938896608772, 0.6260224922996567],
         [0.6260224922996566, -0.9326286026387794],
         [-0.9326286026387794, 0.6260224922996567],
         [-0.7063769892121392, 0.03298523865567593],
         [0.0329852386556759, -0.7063769892121392],
         [-0.3266082494435367, 0.03298523865567593],
         [0.03298523865567593, -0.3266082494435367],
         [-0.3266082494435367, -0.7063769892121392],
         [-0.7063769892121392, -0.3266082494435367]],
        [0.1664394739729003,
         0.10530389893648918,
         0.10530389893648918,
         0.10530389893648918,
         0.02190257668053682,
         0.02190257668053682,
         0.02190257668053682,
         0.07078989558307679,
         0.07078989558307679,
         0.07078989558307679,
         0.07078989558307679,
         0.07078989558307679,
         0.07078989558307679,
         0.05864572819130447,
         0.05864572819130447,
         0.05864572819130447,
         0.05864572819130447,
         0.05864572819130447,
         0.05864572819130447,
         0.11255455942162236,
         0.11255455942162236,
         0.11255455942162236,
         0.11255455942162236,
         0.11255455942162236,
         0.11255455942162236],
    ),
    11: (
        [[-0.3333333333333333, -0.3333333333333333],
         [-0.7931505343116927, 0.5863010686233854],
         [0.5863010686233854, -0.7931505343116927],
         [-0.7931505343116927, -0.7931505343116927],
         [-0.007919208859288762, -0.9841615822814225],
         [-0.9841615822814225, -0.007919208859288762],
         [-0.007919208859288762, -0.007919208859288762],
         [-0.9426248463804313, 0.8852496927608626],
         [0.8852496927608625, -0.9426248463804313],
         [-0.9426248463804313, -0.9426248463804313],
         [-0.1232070488031588, -0.7535859023936824],
         [-0.7535859023936824, -0.12320704880315875],
         [-0.1232070488031588, -0.12320704880315875],
         [-0.5789722556265681, 0.15794451125313613],
         [0.15794451125313613, -0.5789722556265682],
         [-0.5789722556265681, -0.5789722556265682],
         [-0.9841463217764719, -0.6998280889701218],
         [-0.6998280889701218, -0.9841463217764719],
         [0.6839744107465937, -0.6998280889701218],
         [-0.6998280889701218, 0.6839744107465937],
         [0.6839744107465937, -0.9841463217764719],
         [-0.9841463217764719, 0.6839744107465937],
         [-0.9077464835710976, 0.32592553178158273],
         [0.32592553178158273, -0.9077464835710976],
         [-0.4181790482104853, 0.32592553178158273],
         [0.3259255317815828, -0.41817904821048524],
         [-0.4181790482104853, -0.9077464835710976],
         [-0.9077464835710976, -0.41817904821048524]],
        [0.171023869441646,
         0.07741846339100829,
         0.07741846339100829,
         0.07741846339100829,
         0.032718771774123225,
         0.032718771774123225,
         0.032718771774123225,
         0.021158044098743688,
         0.021158044098743688,
         0.021158044098743688,
         0.13416435680756342,
         0.13416435680756342,
         0.13416435680756342,
         0.14068543772831932,
         0.14068543772831932,
         0.14068543772831932,
         0.021177807663287855,
         0.021177807663287855,
         0.021177807663287855,
         0.021177807663287855,
         0.021177807663287855,
         0.021177807663287855,
         0.08057901052989218,
         0.08057901052989218,
         0.08057901052989218,
         0.08057901052989218,
         0.08057901052989218,
         0.08057901052989218],
    ),
}
